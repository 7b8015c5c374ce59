#include "maxidx.h"

size_t max_index(const int *values, size_t count)
{
    size_t best = 0;
    size_t i;

    for (i = 1; i < count - 1; i++) {
        if (values[i] > values[best])
            best = i;
    }
    return best;
}
