#ifndef RING_H
#define RING_H
#include <stddef.h>
#define RING_CAP 4
struct ring {
    int items[RING_CAP];
    size_t head;
    size_t size;
};
int ring_push(struct ring *r, int value);
int ring_pop(struct ring *r, int *out);
#endif
