    int sum = 0;
    #pragma omp parallel for reduction(+:sum)
    for (int i = 0; i < rows; i++) {
        for (int j = 0; j < cols; j++) {
            sum += compute_metric(data[i][j]);
        }
    }
    return sum;
}
