#include "numparse.h"

/* Parses a decimal number with an optional sign and fraction. */
int parse_number(const char *text, double *out)
{
    double value = 0.0;
    double scale = 1.0;
    int sign = 1;
    const char *p = text;
    int digits = 0;

    if (*p == '-' || *p == '+') {
        if (*p == '-')
            sign = -1;
        p++;
    }
    while (*p >= '0' && *p <= '9') {
        value = value * 10.0 + (*p - '0');
        p++;
        digits++;
    }
    if (*p == '.') {
        p++;
        while (*p >= '0' && *p <= '9') {
            scale /= 10.0;
            value += (*p - '0') * scale;
            p++;
            digits++;
        }
    }
    if (digits == 0 || *p != '\0')
        return -1;
    *out = sign * value;
    return 0;
}
