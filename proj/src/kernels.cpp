// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#include "tric/kernels.hpp"

namespace tric::core::kern {

Exec& mode() {
    static Exec m = Exec::parallel;
    return m;
}

#define TRIC_DISPATCH(fn, ...)                          \
    do {                                                \
        if (mode() == Exec::serial)                     \
            return ref::fn(__VA_ARGS__);                \
        return omp::fn(__VA_ARGS__);                    \
    } while (0)

void gemm_nn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate) {
    TRIC_DISPATCH(gemm_nn, A, B, C, m, k, n, accumulate);
}
void gemm_nt(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate) {
    TRIC_DISPATCH(gemm_nt, A, B, C, m, k, n, accumulate);
}
void gemm_tn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate) {
    TRIC_DISPATCH(gemm_tn, A, B, C, m, k, n, accumulate);
}
void softmax_rows(const double* x, double* y, std::int64_t rows, int cols) {
    TRIC_DISPATCH(softmax_rows, x, y, rows, cols);
}
void conv1d_same(const double* x, const double* w, const double* b, double* y,
                 int L, int Cin, int Cout, int K) {
    TRIC_DISPATCH(conv1d_same, x, w, b, y, L, Cin, Cout, K);
}
void depthwise_same(const double* x, const double* w, const double* b, double* y,
                    int T, int M, int D, int K, int axis) {
    TRIC_DISPATCH(depthwise_same, x, w, b, y, T, M, D, K, axis);
}
double sum_chunked(const double* x, std::int64_t n) {
    TRIC_DISPATCH(sum_chunked, x, n);
}

#undef TRIC_DISPATCH

}  // namespace tric::core::kern
