/* Core network device transmit path helpers. */

#include <linux/netdevice.h>
#include <linux/skbuff.h>

#define QUEUE_STATE_XOFF 0x01

struct netdev_queue {
	unsigned long state;
	int qlen;
	void *qdisc;
};

void netif_schedule_queue(struct netdev_queue *txq)
{
	if (!(txq->state & QUEUE_STATE_XOFF))
		__netif_reschedule(txq);
}

int dev_watchdog_touch(struct net_device *dev)
{
	dev->trans_start = jiffies;
	return 0;
}

int dev_queue_len(const struct netdev_queue *txq)
{
	return txq->qlen;
}
