    int rank = 0, size = 1;
    MPI_Comm_rank(MPI_COMM_WORLD, &rank);
    MPI_Comm_size(MPI_COMM_WORLD, &size);
    int local = 0;
    for (int i = rank; i < rows; i += size) {
        for (int j = 0; j < cols; j++) {
            local += compute_metric(data[i][j]);
        }
    }
    int total = 0;
    MPI_Reduce(&local, &total, 1, MPI_INT, MPI_SUM, 0, MPI_COMM_WORLD);
    return total;
}
