#include "textcase.h"

static const char *names[] = { "to_upper_str", "echo" };

const char *command_name(int i)
{
    return names[i];
}
