#ifndef NUMPARSE_H
#define NUMPARSE_H
int parse_number(const char *text, double *out);
#endif
