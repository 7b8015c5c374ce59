#ifndef SORTING_H
#define SORTING_H
#include <stddef.h>
int cmp_int(const void *a, const void *b);
void sort_ints(int *values, size_t count);
#endif
