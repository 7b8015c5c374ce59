#include <string.h>
#include "flags.h"

/*
 * Copies the option name of "-x" or "--name" into name.
 * Returns -1 for non-options or when the name does not fit.
 */
int flag_name(const char *arg, char *name, size_t cap)
{
    size_t start = 0;
    size_t n;

    if (arg[0] != '-')
        return -1;
    start = 1;
    if (arg[1] == '-')
        start = 1;
    n = strlen(arg + start);
    if (n == 0 || n >= cap)
        return -1;
    memcpy(name, arg + start, n + 1);
    return 0;
}
