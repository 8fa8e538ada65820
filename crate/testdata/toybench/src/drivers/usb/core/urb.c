/* USB request block submission. */

#include <linux/usb.h>
#include <linux/slab.h>

struct urb {
	int status;
	int refcnt;
	unsigned int transfer_length;
	unsigned int buffer_length;
	void (*complete)(struct urb *);
};

int usb_submit_urb_checked(struct urb *urb)
{
	if (!urb->complete)
		return -EINVAL;
	if (urb->transfer_length > urb->buffer_length)
		return -EMSGSIZE;
	urb->status = -EINPROGRESS;
	return usb_hcd_submit(urb);
}

void usb_free_urb_safe(struct urb *urb)
{
	if (urb && --urb->refcnt == 0)
		kfree(urb);
}
