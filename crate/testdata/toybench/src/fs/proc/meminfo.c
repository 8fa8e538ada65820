/* procfs memory statistics. */

#include <linux/proc_fs.h>
#include <linux/mm.h>

int meminfo_show(struct seq_file *m)
{
	seq_printf(m, "MemFree:\t%lu kB\n", global_free_pages() << 2);
	return 0;
}
