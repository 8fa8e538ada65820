/* USB hub port state machine. */

#include <linux/usb.h>

#define PORT_RESET 4

struct usb_hub {
	int nports;
	void *intfdata;
};

int hub_port_reset(struct usb_hub *hub, int port)
{
	int tries = 3;

	while (tries--) {
		hub_set_feature(hub, port, PORT_RESET);
		if (hub_wait_reset(hub, port) == 0)
			return 0;
	}
	return -EBUSY;
}

void hub_activate_ports(struct usb_hub *hub)
{
	int i;

	for (i = 0; i < hub->nports; i++)
		hub_power_on(hub, i);
}
