/* Scheduler core: runqueue locking. */

#include <linux/sched.h>

struct rq {
	raw_spinlock_t lock;
	int nr_running;
};

void rq_lock_pair(struct rq *a, struct rq *b)
{
	if (a < b) {
		raw_spin_lock(&a->lock);
		raw_spin_lock(&b->lock);
	} else {
		raw_spin_lock(&b->lock);
		raw_spin_lock(&a->lock);
	}
}

int rq_nr_running(const struct rq *rq)
{
	return rq->nr_running;
}
