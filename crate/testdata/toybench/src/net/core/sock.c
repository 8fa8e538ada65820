/* Generic socket accounting. */

#include <linux/net.h>

struct sock {
	int wmem_alloc;
	int sndbuf;
};

int sock_charge_wmem(struct sock *sk, int amt)
{
	if (sk->wmem_alloc + amt > sk->sndbuf)
		return -ENOBUFS;
	sk->wmem_alloc += amt;
	return 0;
}

void sock_uncharge_wmem(struct sock *sk, int amt)
{
	sk->wmem_alloc -= amt;
}
