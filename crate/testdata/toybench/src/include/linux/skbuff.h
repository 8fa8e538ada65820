/* Socket buffer declarations. */

#ifndef _LINUX_SKBUFF_H
#define _LINUX_SKBUFF_H

struct sk_buff {
	unsigned int len;
	struct sk_buff *next;
};

struct sk_buff_head {
	struct sk_buff *head;
	int qlen;
};

#endif
