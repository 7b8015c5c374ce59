#include <stdio.h>
#include <string.h>
static int failures = 0;
#define CHECK(cond) do { if (!(cond)) { printf("FAIL %s:%d %s\n", __FILE__, __LINE__, #cond); failures++; } } while (0)
#include "hex.h"

int main(void)
{
    CHECK(hex_value('F') == 15);
    CHECK(parse_hex("fF") == 255);
    if (failures)
        return 1;
    printf("PASS\n");
    return 0;
}
