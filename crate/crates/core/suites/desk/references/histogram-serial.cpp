    bins = {0, 0, 0, 0};
    for (double v : x) {
        double frac = v - std::floor(v);
        bins[(size_t)(frac * 4)]++;
    }
}
