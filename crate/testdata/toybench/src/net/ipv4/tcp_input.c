/* TCP input path: ack processing and rto rearm. */

#include <linux/tcp.h>
#include <net/tcp.h>

#define TCP_RTO_MIN 200

void tcp_rearm_rto(struct sock *sk)
{
	u32 rto = tcp_sk(sk)->icsk_rto;

	if (!rto)
		rto = TCP_RTO_MIN;
	sk_reset_timer(sk, rto);
}

int tcp_ack_update_window(struct sock *sk, u32 ack, u32 win)
{
	struct tcp_sock *tp = tcp_sk(sk);

	if (after(ack, tp->snd_una)) {
		tp->snd_una = ack;
		tp->snd_wnd = win;
		return 1;
	}
	return 0;
}
