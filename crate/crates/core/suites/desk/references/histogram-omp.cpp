    size_t b0 = 0, b1 = 0, b2 = 0, b3 = 0;
    #pragma omp parallel for reduction(+:b0, b1, b2, b3)
    for (size_t i = 0; i < x.size(); i++) {
        double frac = x[i] - std::floor(x[i]);
        switch ((int)(frac * 4)) {
            case 0: b0++; break;
            case 1: b1++; break;
            case 2: b2++; break;
            default: b3++; break;
        }
    }
    bins = {b0, b1, b2, b3};
}
