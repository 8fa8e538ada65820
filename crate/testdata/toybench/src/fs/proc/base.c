/* procfs per-task entries. */

#include <linux/proc_fs.h>
#include <linux/seq_file.h>

int proc_pid_status(struct seq_file *m, struct task_struct *task)
{
	seq_printf(m, "Pid:\t%d\n", task->pid);
	seq_printf(m, "State:\t%c\n", task_state_char(task));
	return 0;
}
