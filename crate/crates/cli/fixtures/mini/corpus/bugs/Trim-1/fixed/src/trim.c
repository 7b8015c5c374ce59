#include <ctype.h>
#include <string.h>
#include "trim.h"

// Strips trailing whitespace in place and returns the new length.
size_t trim_right(char *s)
{
    size_t len = strlen(s);
    while (len > 0 && isspace((unsigned char)s[len - 1]))
        len--;
    s[len] = '\0';
    return len;
}
