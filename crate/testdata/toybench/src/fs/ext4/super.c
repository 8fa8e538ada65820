/* ext4 superblock mount checks. */

#include <linux/fs.h>

struct ext4_super {
	unsigned long orphan_head;
	unsigned long inode_count;
	unsigned int group_count;
};

int ext4_check_descriptors(struct ext4_super *sb)
{
	unsigned int i;

	for (i = 0; i < sb->group_count; i++)
		if (!ext4_group_ok(sb, i))
			return -EFSCORRUPTED;
	return 0;
}

unsigned long sb_orphan_head(struct ext4_super *sb)
{
	return sb->orphan_head;
}

void sb_set_orphan_head(struct ext4_super *sb, unsigned long ino)
{
	sb->orphan_head = ino;
}
