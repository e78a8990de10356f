#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static const char *usage = "usage: wordcount [-l] [-w] [-c] [file ...]";

int main(int argc, char **argv)
{
    long lines = 0, words = 0, chars = 0;
    int in_word = 0;
    int c;
    FILE *f = argc > 1 ? fopen(argv[argc - 1], "r") : stdin;
    if (!f) {
        fprintf(stderr, "%s\n", usage);
        return 1;
    }
    while ((c = fgetc(f)) != EOF) {
        chars++;
        if (c == '\n')
            lines++;
        if (c == ' ' || c == '\n' || c == '\t') {
            in_word = 0;
        } else if (!in_word) {
            in_word = 1;
            words++;
        }
    }
    printf("%7ld %7ld %7ld\n", lines, words, chars);
    return 0;
}
