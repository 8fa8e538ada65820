/* Network device structures shared across the stack. */

#ifndef _LINUX_NETDEVICE_H
#define _LINUX_NETDEVICE_H

struct net_device {
	char name[16];
	unsigned long trans_start;
	unsigned long stats_tx_packets;
	unsigned long stats_tx_bytes;
	void *priv;
};

void netif_schedule_queue(struct netdev_queue *txq);
int netif_rx(struct sk_buff *skb);

#endif
