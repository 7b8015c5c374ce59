#include "ring.h"

int ring_push(struct ring *r, int value)
{
    size_t slot;

    if (r->size == RING_CAP)
        return -1;
    slot = (r->head + r->size) % RING_CAP;
    r->items[slot] = value;
    r->size++;
    return 0;
}

int ring_pop(struct ring *r, int *out)
{
    if (r->size == 0)
        return -1;
    *out = r->items[r->head];
    r->head = (r->head + 1) % RING_CAP;
    r->size--;
    return 0;
}
