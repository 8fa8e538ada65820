/* ALSA control element lookup. */

#include <sound/control.h>

struct snd_ctl_elem {
	unsigned int numid;
	struct snd_ctl_elem *next;
};

struct snd_ctl_elem *ctl_find_numid(struct snd_card *card, unsigned int numid)
{
	struct snd_ctl_elem *e;

	for (e = card->controls; e; e = e->next)
		if (e->numid == numid)
			return e;
	return NULL;
}
