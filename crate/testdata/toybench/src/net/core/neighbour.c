/* Neighbour cache timers. */

#include <linux/netdevice.h>

struct neighbour {
	int refcnt;
	unsigned long confirmed;
	unsigned long reachable_time;
	unsigned long parms_delay;
	struct timer_list timer;
};

void neigh_hold_timer(struct neighbour *n)
{
	n->refcnt++;
	mod_timer(&n->timer, jiffies + n->parms_delay);
}

int neigh_stale(const struct neighbour *n)
{
	return time_after(jiffies, n->confirmed + n->reachable_time);
}
