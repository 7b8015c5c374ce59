#include "hex.h"

int hex_value(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

long parse_hex(const char *s)
{
    long total = 0;
    for (; *s; s++) {
        int d = hex_value(*s);
        if (d < 0)
            return -1;
        total = total * 16 + d;
    }
    return total;
}
