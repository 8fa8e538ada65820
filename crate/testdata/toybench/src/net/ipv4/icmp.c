/* ICMP rate limiting. */

#include <linux/icmp.h>

struct icmp_bucket {
	unsigned long tokens;
	unsigned long stamp;
	unsigned long burst;
};

int icmp_rate_allow(struct icmp_bucket *b)
{
	unsigned long now = jiffies;

	b->tokens += now - b->stamp;
	b->stamp = now;
	if (b->tokens > b->burst)
		b->tokens = b->burst;
	if (b->tokens < 1)
		return 0;
	b->tokens--;
	return 1;
}
