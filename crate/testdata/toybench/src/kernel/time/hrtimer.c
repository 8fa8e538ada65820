/* High-resolution timer expiry. */

#include <linux/hrtimer.h>

struct hrtimer {
	u64 expires;
};

int hrtimer_expired(const struct hrtimer *t, u64 now)
{
	return now >= t->expires;
}
