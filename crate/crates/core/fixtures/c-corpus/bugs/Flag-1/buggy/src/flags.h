#ifndef FLAGS_H
#define FLAGS_H
#include <stddef.h>
int flag_name(const char *arg, char *name, size_t cap);
#endif
