#include <stdlib.h>
#include "sorting.h"

int cmp_int(const void *a, const void *b)
{
    int x = *(const int *)a;
    int y = *(const int *)b;
    return (x < y) - (x > y);
}

void sort_ints(int *values, size_t count)
{
    qsort(values, count, sizeof *values, cmp_int);
}
