/* Buddy allocator order calculations. */

#include <linux/mm.h>
#include <linux/gfp.h>

int page_order_for(unsigned long nr_pages)
{
	int order = 0;

	while ((1UL << order) < nr_pages)
		order++;
	return order;
}
