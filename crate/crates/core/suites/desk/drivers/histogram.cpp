#include <array>
#include <cmath>
#include <cstdio>
#include <vector>
#ifdef _OPENMP
#include <omp.h>
#endif

{{COMPLETION}}

int main() {
    const size_t sizes[] = {1, 7, 64, 5000, 200001};
    unsigned state = 4242u;
    for (size_t n : sizes) {
        std::vector<double> x(n);
        std::array<size_t, 4> want = {0, 0, 0, 0};
        for (auto& v : x) {
            state = state * 1103515245u + 12345u;
            unsigned sixteenths = (state >> 16) % 16;
            state = state * 1103515245u + 12345u;
            v = (double)((state >> 16) % 1000) + sixteenths / 16.0;
            want[sixteenths / 4]++;
        }
        for (int trial = 0; trial < 3; trial++) {
            std::array<size_t, 4> bins = {99, 99, 99, 99};
            count_quartiles(x, bins);
            if (bins != want) {
                printf("PARAFORGE: TEST FAILED n=%zu expected=[%zu, %zu, %zu, %zu] got=[%zu, %zu, %zu, %zu]\n", n,
                       want[0], want[1], want[2], want[3], bins[0], bins[1], bins[2], bins[3]);
                return 1;
            }
        }
    }
    printf("PARAFORGE: ALL TESTS PASSED\n");
    return 0;
}
