/* Traffic classifier registration. */

#include <net/pkt_cls.h>

struct tcf_ops {
	int (*classify)(void *);
	struct tcf_ops *next;
};

int tcf_register_ops(struct tcf_ops *ops)
{
	if (!ops->classify)
		return -EINVAL;
	ops->next = tcf_ops_list;
	tcf_ops_list = ops;
	return 0;
}
