/* SLUB allocator fast path. */

#include <linux/slab.h>
#include <linux/mm.h>

struct kmem_cache {
	void *freelist;
	unsigned int size;
};

void *slab_alloc_fast(struct kmem_cache *s)
{
	void *object = s->freelist;

	if (object)
		s->freelist = *(void **)object;
	return object;
}
