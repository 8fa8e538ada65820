/* IPv4 route cache lookups. */

#include <net/route.h>

#define RT_HASH_SIZE 256

struct rtable {
	u32 daddr;
	struct rtable *next;
};

struct rtable *rt_cache_lookup(u32 daddr)
{
	struct rtable *rt;

	for (rt = rt_hash[rt_hash_code(daddr)]; rt; rt = rt->next)
		if (rt->daddr == daddr)
			return rt;
	return NULL;
}

unsigned int rt_hash_code(u32 daddr)
{
	return (daddr ^ (daddr >> 16)) & (RT_HASH_SIZE - 1);
}
