#ifndef UNITS_H
#define UNITS_H
int heading(int degrees);
int clock_hour(int hour);
#endif
