/* ACPI battery state reporting. */

#include <linux/acpi.h>

struct acpi_battery {
	void *handle;
	int remaining;
	int full_charge;
	int stale;
};

int battery_get_capacity(struct acpi_battery *bat)
{
	if (bat->full_charge == 0)
		return -ENODEV;
	return bat->remaining * 100 / bat->full_charge;
}

int battery_refresh_state(struct acpi_battery *bat)
{
	int err = acpi_read_block(bat->handle, &bat->remaining);

	if (err)
		return err;
	bat->stale = 0;
	return 0;
}

void battery_mark_stale(struct acpi_battery *bat)
{
	bat->stale = 1;
}
