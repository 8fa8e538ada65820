/* CFS: vruntime accounting and throttling. */

#include <linux/sched.h>

struct cfs_rq {
	u64 exec_start;
	u64 min_vruntime;
	int throttle_count;
};

void update_curr_fair(struct cfs_rq *cfs_rq)
{
	u64 now = rq_clock(cfs_rq);
	u64 delta = now - cfs_rq->exec_start;

	cfs_rq->exec_start = now;
	cfs_rq->min_vruntime += delta;
}

int cfs_throttled(const struct cfs_rq *cfs_rq)
{
	return cfs_rq->throttle_count > 0;
}

void unthrottle_cfs_rq(struct cfs_rq *cfs_rq)
{
	if (cfs_rq->throttle_count > 0)
		cfs_rq->throttle_count--;
}
