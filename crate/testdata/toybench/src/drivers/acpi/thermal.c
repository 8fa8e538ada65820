/* ACPI thermal zone trips. */

#include <linux/thermal.h>

#define THERMAL_TRIP_NONE 0
#define THERMAL_TRIP_PASSIVE 1
#define THERMAL_TRIP_CRITICAL 2

struct thermal_zone {
	int temperature;
	int critical;
	int passive;
};

int thermal_check_trip(struct thermal_zone *tz)
{
	if (tz->temperature >= tz->critical)
		return THERMAL_TRIP_CRITICAL;
	if (tz->temperature >= tz->passive)
		return THERMAL_TRIP_PASSIVE;
	return THERMAL_TRIP_NONE;
}
