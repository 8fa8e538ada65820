/* ext4 block allocation bitmaps. */

#include <linux/fs.h>
#include <linux/bitmap.h>

int ext4_count_free_blocks(const unsigned long *map, int nbits)
{
	int i, free = 0;

	for (i = 0; i < nbits; i++)
		if (!test_bit(i, map))
			free++;
	return free;
}
