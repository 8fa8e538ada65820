/* Page reclaim scan control. */

#include <linux/mm.h>
#include <linux/swap.h>

struct scan_control {
	unsigned long nr_to_reclaim;
	unsigned long nr_reclaimed;
};

unsigned long shrink_page_list_count(struct scan_control *sc)
{
	return sc->nr_to_reclaim - sc->nr_reclaimed;
}
