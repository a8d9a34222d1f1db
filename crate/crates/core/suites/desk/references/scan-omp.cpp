    size_t n = x.size();
    int nthreads = omp_get_max_threads();
    std::vector<long long> offsets(nthreads + 1, 0);
    #pragma omp parallel num_threads(nthreads)
    {
        int t = omp_get_thread_num();
        size_t lo = n * t / nthreads, hi = n * (t + 1) / nthreads;
        long long running = 0;
        for (size_t i = lo; i < hi; i++) {
            running += x[i];
            output[i] = running;
        }
        offsets[t + 1] = running;
        #pragma omp barrier
        #pragma omp single
        for (int k = 1; k <= nthreads; k++) offsets[k] += offsets[k - 1];
        for (size_t i = lo; i < hi; i++) output[i] += offsets[t];
    }
}
