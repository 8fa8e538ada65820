/* Generic qdisc: watchdog and requeue logic. */

#include <linux/netdevice.h>
#include <net/sch_generic.h>

#define QDISC_STALLED 0x04

struct qdisc {
	unsigned int flags;
	int qlen;
	int limit;
	struct sk_buff_head list;
	struct netdev_queue *dev_queue;
};

void qdisc_watchdog_fire(struct qdisc *q)
{
	q->flags |= QDISC_STALLED;
	netif_schedule_queue(q->dev_queue);
}

int qdisc_requeue(struct qdisc *q, struct sk_buff *skb)
{
	if (q->qlen >= q->limit)
		return -ENOBUFS;
	__skb_queue_head(&q->list, skb);
	q->qlen++;
	return 0;
}

int qdisc_drain(struct qdisc *q)
{
	int n = 0;

	while (q->qlen > 0) {
		q->qlen--;
		n++;
	}
	return n;
}
