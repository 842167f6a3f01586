// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace tric::core::kern {

/// Execution mode for the hot kernels. `serial` runs the plain reference
/// loops; `parallel` runs the OpenMP variants. Both produce bit-identical
/// results: parallel loops only split independent outputs and keep each
/// output's accumulation order fixed.
enum class Exec { serial, parallel };

Exec& mode();

// C[m*n] = (accumulate ? C : 0) + A[m*k] * B[k*n]
void gemm_nn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
// C[m*n] = (accumulate ? C : 0) + A[m*k] * B[n*k]^T
void gemm_nt(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
// C[m*n] = (accumulate ? C : 0) + A[k*m]^T * B[k*n]
void gemm_tn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);

/// Row-wise softmax, numerically stabilised by the row max.
void softmax_rows(const double* x, double* y, std::int64_t rows, int cols);

/// 1-D convolution with same zero padding. x: [L x Cin], w: [K x Cin x Cout],
/// b: [Cout] or nullptr, y: [L x Cout]. K must be odd.
void conv1d_same(const double* x, const double* w, const double* b, double* y,
                 int L, int Cin, int Cout, int K);

/// Depth-wise 1-D convolution over axis 0 (frames) or 1 (joints) of a
/// [T x M x D] tensor. w: [K x D], b: [D] or nullptr. K must be odd.
void depthwise_same(const double* x, const double* w, const double* b, double* y,
                    int T, int M, int D, int K, int axis);

/// Deterministic sum: fixed-size chunks reduced in index order, so the
/// result is independent of thread count and identical in both modes.
double sum_chunked(const double* x, std::int64_t n);

namespace ref {
void gemm_nn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void gemm_nt(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void gemm_tn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void softmax_rows(const double* x, double* y, std::int64_t rows, int cols);
void conv1d_same(const double* x, const double* w, const double* b, double* y,
                 int L, int Cin, int Cout, int K);
void depthwise_same(const double* x, const double* w, const double* b, double* y,
                    int T, int M, int D, int K, int axis);
double sum_chunked(const double* x, std::int64_t n);
}  // namespace ref

namespace omp {
void gemm_nn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void gemm_nt(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void gemm_tn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void softmax_rows(const double* x, double* y, std::int64_t rows, int cols);
void conv1d_same(const double* x, const double* w, const double* b, double* y,
                 int L, int Cin, int Cout, int K);
void depthwise_same(const double* x, const double* w, const double* b, double* y,
                    int T, int M, int D, int K, int axis);
double sum_chunked(const double* x, std::int64_t n);
}  // namespace omp

}  // namespace tric::core::kern
