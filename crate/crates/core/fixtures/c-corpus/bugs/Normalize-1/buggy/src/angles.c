#include "units.h"

static int normalize(int degrees)
{
    int d = degrees % 360;
    return d;
}

int heading(int degrees)
{
    return normalize(degrees);
}
