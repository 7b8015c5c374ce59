#include <stdio.h>
#include <string.h>
static int failures = 0;
#define CHECK(cond) do { if (!(cond)) { printf("FAIL %s:%d %s\n", __FILE__, __LINE__, #cond); failures++; } } while (0)
#include "flags.h"

int main(void)
{
    char name[16];
    CHECK(flag_name("--verbose", name, sizeof name) == 0 && strcmp(name, "verbose") == 0);
    if (failures)
        return 1;
    printf("PASS\n");
    return 0;
}
