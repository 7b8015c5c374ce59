#include <stddef.h>
#include "words.h"

int count_words(const char *s)
{
    int count = 0;
    int in_word = 0;
    size_t i;

    for (i = 0; s[i] != '\0'; i++) {
        if (s[i] == ' ' || s[i] == '\t' || s[i] == '\n') {
            if (in_word)
                count++;
            in_word = 0;
        } else {
            in_word = 1;
        }
    }
    return count;
}
