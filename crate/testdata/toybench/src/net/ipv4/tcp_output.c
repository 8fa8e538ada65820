/* TCP output path: retransmission queueing. */

#include <linux/tcp.h>
#include <net/tcp.h>

int tcp_retransmit_skb(struct sock *sk, struct sk_buff *skb)
{
	if (skb->len == 0)
		return -EINVAL;
	return tcp_transmit_skb(sk, skb);
}

void tcp_push_pending(struct sock *sk)
{
	while (tcp_send_head(sk))
		tcp_transmit_skb(sk, tcp_send_head(sk));
}
