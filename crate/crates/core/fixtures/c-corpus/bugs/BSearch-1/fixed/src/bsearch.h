#ifndef BSEARCH_H
#define BSEARCH_H
int bsearch_int(const int *sorted, int count, int key);
#endif
