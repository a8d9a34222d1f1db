#include <cstdio>
#include <vector>
#ifdef _OPENMP
#include <omp.h>
#endif

int compute_metric(int data_point) {
    return (data_point * 31 + 7) % 101;
}

{{COMPLETION}}

static int expected_sum(std::vector<std::vector<int>> const& data) {
    int sum = 0;
    for (auto const& row : data)
        for (int v : row) sum += compute_metric(v);
    return sum;
}

int main() {
    const int shapes[][2] = {{1, 1}, {3, 5}, {64, 33}, {257, 129}, {1000, 100}};
    unsigned state = 12345u;
    for (auto const& shape : shapes) {
        int rows = shape[0], cols = shape[1];
        std::vector<std::vector<int>> storage(rows, std::vector<int>(cols));
        std::vector<int*> ptrs(rows);
        for (int i = 0; i < rows; i++) {
            for (int j = 0; j < cols; j++) {
                state = state * 1103515245u + 12345u;
                storage[i][j] = (int)((state >> 16) % 1000) - 500;
            }
            ptrs[i] = storage[i].data();
        }
        int want = expected_sum(storage);
        for (int trial = 0; trial < 3; trial++) {
            int got = aggregate_metrics(ptrs.data(), rows, cols);
            if (got != want) {
                printf("PARAFORGE: TEST FAILED rows=%d cols=%d expected=%d got=%d\n", rows, cols, want, got);
                return 1;
            }
        }
    }
    printf("PARAFORGE: ALL TESTS PASSED\n");
    return 0;
}
