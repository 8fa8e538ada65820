/* ext4 inode lifecycle: orphan list handling. */

#include <linux/fs.h>

#define EXT4_FIRST_INO 11

int ext4_orphan_add(struct ext4_inode *inode)
{
	if (inode->orphan_next)
		return 0;
	inode->orphan_next = sb_orphan_head(inode->sb);
	sb_set_orphan_head(inode->sb, inode->ino);
	return 0;
}

int ext4_orphan_cleanup(struct ext4_super *sb)
{
	unsigned long ino;
	int cleaned = 0;

	while ((ino = sb_orphan_head(sb)) != 0) {
		if (!ext4_valid_ino(sb, ino))
			break;
		ext4_truncate_ino(sb, ino);
		cleaned++;
	}
	return cleaned;
}

int ext4_valid_ino(struct ext4_super *sb, unsigned long ino)
{
	return ino >= EXT4_FIRST_INO && ino < sb->inode_count;
}
