/* Virtual ethernet pair driver. */

#include <linux/netdevice.h>
#include <linux/etherdevice.h>

int veth_xmit(struct sk_buff *skb, struct net_device *dev)
{
	struct net_device *peer = veth_peer(dev);

	if (!peer)
		return -ENOTCONN;
	return netif_rx_peer(peer, skb);
}

struct net_device *veth_peer(struct net_device *dev)
{
	return dev->priv;
}
