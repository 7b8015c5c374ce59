#include "units.h"

static int normalize(int hour)
{
    int h = hour % 24;
    return h < 0 ? h + 24 : h;
}

int clock_hour(int hour)
{
    return normalize(hour);
}
