/* Socket buffer allocation and trimming. */

#include <linux/skbuff.h>
#include <linux/slab.h>

struct sk_buff *skb_alloc_small(unsigned int size)
{
	struct sk_buff *skb = kmalloc(sizeof(*skb) + size, GFP_ATOMIC);

	if (skb)
		skb->len = 0;
	return skb;
}

void skb_trim_tail(struct sk_buff *skb, unsigned int len)
{
	if (skb->len > len)
		skb->len = len;
}
