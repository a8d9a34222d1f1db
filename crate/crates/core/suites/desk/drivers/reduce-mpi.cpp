#include <cstdio>
#include <vector>
#include <mpi.h>

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

int main(int argc, char** argv) {
    MPI_Init(&argc, &argv);
    int rank = 0;
    MPI_Comm_rank(MPI_COMM_WORLD, &rank);
    const int shapes[][2] = {{1, 1}, {3, 5}, {64, 33}, {257, 129}, {1000, 100}};
    unsigned state = 12345u;
    int failed = 0;
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
        int got = aggregate_metrics(ptrs.data(), rows, cols);
        int want = expected_sum(storage);
        if (rank == 0 && !failed && got != want) {
            printf("PARAFORGE: TEST FAILED rows=%d cols=%d expected=%d got=%d\n", rows, cols, want, got);
            failed = 1;
        }
    }
    if (rank == 0 && !failed) printf("PARAFORGE: ALL TESTS PASSED\n");
    fflush(stdout);
    MPI_Finalize();
    return 0;
}
