#ifndef TEXTCASE_H
#define TEXTCASE_H
void to_upper_str(char *s);
const char *command_name(int i);
#endif
