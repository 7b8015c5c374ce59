#include <stdio.h>
#include <string.h>
static int failures = 0;
#define CHECK(cond) do { if (!(cond)) { printf("FAIL %s:%d %s\n", __FILE__, __LINE__, #cond); failures++; } } while (0)
#include "clamp.h"

int main(void)
{
    CHECK(clamp(15, 0, 10) == 10);
    CHECK(percent(3, 2) == 100);
    if (failures)
        return 1;
    printf("PASS\n");
    return 0;
}
