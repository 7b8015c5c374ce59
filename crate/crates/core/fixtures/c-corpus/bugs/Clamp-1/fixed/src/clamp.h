#ifndef CLAMP_H
#define CLAMP_H
int clamp(int value, int low, int high);
int percent(int part, int whole);
#endif
