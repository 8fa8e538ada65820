/* TCP socket state shared between input and output paths. */

#ifndef _LINUX_TCP_H
#define _LINUX_TCP_H

struct tcp_sock {
	unsigned int snd_una;
	unsigned int snd_wnd;
	unsigned int icsk_rto;
};

#endif
