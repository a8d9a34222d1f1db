#include <cstdio>
#include <vector>
#ifdef _OPENMP
#include <omp.h>
#endif

{{COMPLETION}}

int main() {
    const size_t sizes[] = {1, 2, 17, 1000, 100003};
    unsigned state = 777u;
    for (size_t n : sizes) {
        std::vector<long long> x(n);
        for (auto& v : x) {
            state = state * 1103515245u + 12345u;
            v = (long long)((state >> 16) % 101) - 50;
        }
        std::vector<long long> want(n);
        long long running = 0;
        for (size_t i = 0; i < n; i++) want[i] = running += x[i];
        for (int trial = 0; trial < 3; trial++) {
            std::vector<long long> output(n, -1);
            prefix_sum(x, output);
            for (size_t i = 0; i < n; i++) {
                if (output[i] != want[i]) {
                    printf("PARAFORGE: TEST FAILED n=%zu index=%zu expected=%lld got=%lld\n", n, i, want[i], output[i]);
                    return 1;
                }
            }
        }
    }
    printf("PARAFORGE: ALL TESTS PASSED\n");
    return 0;
}
