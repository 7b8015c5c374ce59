#ifndef TRIM_H
#define TRIM_H
#include <stddef.h>
size_t trim_right(char *s);
#endif
