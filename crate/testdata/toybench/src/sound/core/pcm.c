/* ALSA PCM stream state. */

#include <sound/pcm.h>

#define PCM_STATE_PREPARED 2
#define PCM_STATE_RUNNING 3

struct pcm_substream {
	int state;
};

int pcm_stream_ready(const struct pcm_substream *s)
{
	return s->state == PCM_STATE_PREPARED || s->state == PCM_STATE_RUNNING;
}
