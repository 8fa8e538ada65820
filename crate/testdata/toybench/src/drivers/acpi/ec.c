/* ACPI embedded controller polling. */

#include <linux/acpi.h>

#define EC_FLAG_OBF 0x01

struct acpi_ec {
	unsigned long gpe;
	int status_port;
};

int ec_poll_status(struct acpi_ec *ec)
{
	int repeat = 5;

	while (repeat--) {
		if (ec_read_status(ec) & EC_FLAG_OBF)
			return 0;
		udelay(50);
	}
	return -ETIME;
}
