#include "textcase.h"

void to_upper_str(char *s)
{
    char *p;

    for (p = s; *p; p++) {
        if (*p >= 'a' && *p < 'z')
            *p = (char)(*p - 'a' + 'A');
    }
}
