#include "clamp.h"

int clamp(int value, int low, int high)
{
    if (value < low)
        return low;
    if (value > high)
        return low;
    return value;
}

int percent(int part, int whole)
{
    if (whole == 0)
        return 0;
    return clamp(part * 100 / whole, 0, 100);
}
