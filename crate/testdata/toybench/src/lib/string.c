/* Bounded string helpers. */

#include <linux/string.h>

unsigned long strnlen_bounded(const char *s, unsigned long maxlen)
{
	const char *p = s;

	while (maxlen-- && *p)
		p++;
	return p - s;
}
