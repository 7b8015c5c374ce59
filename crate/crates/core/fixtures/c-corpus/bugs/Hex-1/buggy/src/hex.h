#ifndef HEX_H
#define HEX_H
int hex_value(char c);
long parse_hex(const char *s);
#endif
