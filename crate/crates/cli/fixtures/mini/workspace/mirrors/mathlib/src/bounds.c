int limit(int v, int lo, int hi)
{
    if (v < lo)
        return lo;
    if (v > hi)
        return hi;
    return v;
}

int cap(int v, int hi)
{
    return v > hi ? hi : v;
}
