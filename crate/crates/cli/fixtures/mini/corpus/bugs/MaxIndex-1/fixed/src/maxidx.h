#ifndef MAXIDX_H
#define MAXIDX_H
#include <stddef.h>
size_t max_index(const int *values, size_t count);
#endif
