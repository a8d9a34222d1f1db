//! Reference texts used by tests, examples and the desk pipeline.

/// A generator reply in the two-section layout: an OpenMP reduction problem
/// written by Llama-3-70B from the seed `static bag_t threadbag[NUMTHREADS + 1];`.
pub const LISTING_SAMPLE: &str = r#"** Problem Statement **
In a high-performance computing application, you are tasked with optimizing a critical component that processes large datasets. The component, responsible for aggregating statistical metrics, is currently sequential and bottlenecking the entire system. Your mission is to parallelize the aggregation process to significantly reduce the processing time. The statistical metrics are stored in a 2D array `data` of size `ROWS x COLS`, where each element `data[i][j]` represents a data point. The aggregation function, `compute_metric`, takes a single data point as input and returns a metric value. The goal is to compute the sum of metric values for all data points in the array. The original sequential code is as follows:

```c
int compute_metric(int data_point) {
    // complex computation involving data_point
    return result;
}
void aggregate_metrics(int** data, int rows, int cols) {
    int sum = 0;
    for (int i = 0; i < rows; i++) {
        for (int j = 0; j < cols; j++) {
            sum += compute_metric(data[i][j]);
        }
    }
    printf("Sum of metrics: %d\n", sum);
}
```
Your task is to parallelize the `aggregate_metrics` function using OpenMP to take advantage of multiple CPU cores. The `compute_metric` function remains unchanged.

** Solution **
To parallelize the `aggregate_metrics` function, we can use OpenMP's parallel for directive to distribute the computation across multiple threads. We'll also employ OpenMP's reduction clause to safely accumulate the partial sums computed by each thread. Here's the parallelized code:

```c
#include <omp.h>
int compute_metric(int data_point) {
    // complex computation involving data_point
    return result;
}

void aggregate_metrics(int** data, int rows, int cols) {
    int sum = 0;
    #pragma omp parallel for reduction(+:sum)
    for (int i = 0; i < rows; i++) {
        for (int j = 0; j < cols; j++) {
            sum += compute_metric(data[i][j]);
        }
    }
    printf("Sum of metrics: %d\n", sum);
}
```
In this solution:

* We added the `#pragma omp parallel for` directive to parallelize the outer loop, which iterates over the rows of the 2D array.
* We used the `reduction(+:sum)` clause to specify that each thread should maintain its own partial sum, which will be combined using the `+` operator at the end of the parallel region. This ensures that the final sum is correctly computed.
* The inner loop, which iterates over the columns, is executed sequentially within each thread, as it has no dependencies between iterations. By parallelizing the `aggregate_metrics` function, we can significantly reduce the processing time for large datasets, taking advantage of the available CPU cores.
"#;

/// The seed snippet behind [`LISTING_SAMPLE`].
pub const LISTING_SEED: &str = "static bag_t threadbag[NUMTHREADS + 1];";

/// Body-only completion for the desk suite's OpenMP sum-of-metrics problem,
/// using the same `parallel for reduction(+:sum)` pattern as [`LISTING_SAMPLE`].
pub const OMP_REDUCTION_COMPLETION: &str = r#"    int sum = 0;
    #pragma omp parallel for reduction(+:sum)
    for (int i = 0; i < rows; i++) {
        for (int j = 0; j < cols; j++) {
            sum += compute_metric(data[i][j]);
        }
    }
    return sum;
}
"#;

/// Compiles, runs, and returns the wrong answer (misses the last row).
pub const OMP_REDUCTION_WRONG: &str = r#"    int sum = 0;
    #pragma omp parallel for reduction(+:sum)
    for (int i = 0; i < rows - 1; i++) {
        for (int j = 0; j < cols; j++) {
            sum += compute_metric(data[i][j]);
        }
    }
    return sum;
}
"#;

/// A correct serial body followed by a loop that never terminates.
pub const SERIAL_REDUCTION_HANG: &str = r#"    int sum = 0;
    for (int i = 0; i < rows; i++) {
        for (int j = 0; j < cols; j++) {
            sum += compute_metric(data[i][j]);
        }
    }
    volatile int spin = 1;
    while (spin) { }
    return sum;
}
"#;

/// A deterministic mixed-language source tree of `files` files as
/// `(relative path, contents)`, cycling through OpenMP C, MPI C++, OpenMP
/// Fortran, plain Python and CUDA.
pub fn synthetic_corpus(files: usize) -> Vec<(String, String)> {
    (0..files)
        .map(|i| match i % 5 {
            0 => (
                format!("c/omp_{i:03}.c"),
                format!(
                    "#include <omp.h>\n\n\
                     double dot_{i}(const double* a, const double* b, int n) {{\n    \
                     double s = 0.0;\n    \
                     #pragma omp parallel for reduction(+:s)\n    \
                     for (int k = 0; k < n; k++) s += a[k] * b[k] * {i};\n    \
                     return s;\n}}\n\n\
                     void scale_{i}(double* x, int n) {{\n    \
                     for (int k = 0; k < n; k++) x[k] *= {i}.5;\n}}\n"
                ),
            ),
            1 => (
                format!("cpp/mpi_{i:03}.cpp"),
                format!(
                    "#include <mpi.h>\n#include <vector>\n\n\
                     int total_{i}(int local) {{\n    \
                     int sum = 0;\n    \
                     MPI_Allreduce(&local, &sum, 1, MPI_INT, MPI_SUM, MPI_COMM_WORLD);\n    \
                     return sum + {i};\n}}\n\n\
                     std::vector<int> ranks_{i}(int n) {{\n    \
                     std::vector<int> out(n);\n    \
                     for (int r = 0; r < n; ++r) out[r] = r * {i};\n    \
                     return out;\n}}\n"
                ),
            ),
            2 => (
                format!("fortran/axpy_{i:03}.f90"),
                format!(
                    "subroutine axpy_{i}(n, a, x, y)\n  \
                     integer :: n, k\n  \
                     real :: a, x(n), y(n)\n  \
                     !$omp parallel do\n  \
                     do k = 1, n\n    \
                     y(k) = a * x(k) + y(k) + {i}.0\n  \
                     end do\n  \
                     !$omp end parallel do\n\
                     end subroutine axpy_{i}\n\n\
                     subroutine fill_{i}(n, x)\n  \
                     integer :: n\n  \
                     real :: x(n)\n  \
                     x = {i}.0\n\
                     end subroutine fill_{i}\n"
                ),
            ),
            3 => (
                format!("py/stats_{i:03}.py"),
                format!(
                    "def mean_{i}(values):\n    \
                     return sum(values) / max(len(values), {i})\n\n\
                     def spread_{i}(values):\n    \
                     lo, hi = min(values), max(values)\n    \
                     return (hi - lo) * {i}\n"
                ),
            ),
            _ => (
                format!("cuda/saxpy_{i:03}.cu"),
                format!(
                    "__global__ void saxpy_{i}(int n, float a, const float* x, float* y) {{\n    \
                     int k = blockIdx.x * blockDim.x + threadIdx.x;\n    \
                     if (k < n) y[k] = a * x[k] + y[k] + {i}.0f;\n}}\n\n\
                     void launch_{i}(int n, float a, const float* x, float* y) {{\n    \
                     saxpy_{i}<<<(n + 255) / 256, 256>>>(n, a, x, y);\n}}\n"
                ),
            ),
        })
        .collect()
}

/// Writes [`synthetic_corpus`] below `root`.
pub fn write_synthetic_corpus(root: &std::path::Path, files: usize) -> std::io::Result<()> {
    for (rel, text) in synthetic_corpus(files) {
        let path = root.join(rel);
        std::fs::create_dir_all(path.parent().expect("relative path has a parent"))?;
        std::fs::write(path, text)?;
    }
    Ok(())
}
