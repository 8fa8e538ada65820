/* Timer wheel insertion. */

#include <linux/timer.h>

#define TIMER_WHEEL_MASK 63

struct timer_base {
	unsigned long clk;
	struct timer_list *vectors[64];
};

void timer_enqueue(struct timer_base *base, struct timer_list *t)
{
	unsigned int idx = timer_wheel_index(base, t->expires);

	t->next = base->vectors[idx];
	base->vectors[idx] = t;
}

unsigned int timer_wheel_index(struct timer_base *base, unsigned long expires)
{
	return (expires - base->clk) & TIMER_WHEEL_MASK;
}
