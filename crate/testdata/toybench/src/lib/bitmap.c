/* Bitmap region operations. */

#include <linux/bitmap.h>

void bitmap_set_region(unsigned long *map, int start, int len)
{
	int i;

	for (i = start; i < start + len; i++)
		set_bit(i, map);
}
