#include "bsearch.h"

int bsearch_int(const int *sorted, int count, int key)
{
    int lo = 0;
    int hi = count - 1;

    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (sorted[mid] == key)
            return mid;
        if (sorted[mid] < key)
            lo = mid + 1;
        else
            hi = mid - 1;
    }
    return -1;
}
