/* TUN/TAP character device ring. */

#include <linux/if_tun.h>

struct tun_ring {
	unsigned int head;
	unsigned int tail;
	unsigned int size;
	void **slots;
};

int tun_ring_produce(struct tun_ring *r, void *ptr)
{
	unsigned int head = r->head;

	if (head - r->tail >= r->size)
		return -ENOSPC;
	r->slots[head & (r->size - 1)] = ptr;
	r->head = head + 1;
	return 0;
}
