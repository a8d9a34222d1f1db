    long long running = 0;
    for (size_t i = 0; i < x.size(); i++) {
        running += x[i];
        output[i] = running;
    }
}
