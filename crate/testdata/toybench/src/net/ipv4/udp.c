/* UDP receive queue management. */

#include <linux/udp.h>
#include <net/sock.h>

int udp_queue_rcv(struct sock *sk, struct sk_buff *skb)
{
	if (sock_charge_wmem(sk, skb->len))
		return -ENOMEM;
	__skb_queue_tail(&sk->receive_queue, skb);
	return 0;
}
