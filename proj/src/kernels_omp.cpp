// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0
//
// OpenMP kernels. Parallelism splits independent output elements only;
// every output keeps the reference accumulation order, so results match
// the ref:: kernels bit for bit at any thread count. Small problems skip
// the parallel region via the pragma if-clause.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tric/kernels.hpp"

namespace tric::core::kern::omp {

namespace {
constexpr std::int64_t kMinWork = 1 << 14;
}

void gemm_nn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate) {
    const std::int64_t work = static_cast<std::int64_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int i = 0; i < m; ++i) {
        double* ci = C + static_cast<std::int64_t>(i) * n;
        if (!accumulate) std::fill(ci, ci + n, 0.0);
        const double* ai = A + static_cast<std::int64_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double a = ai[p];
            const double* bp = B + static_cast<std::int64_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

void gemm_nt(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate) {
    const std::int64_t work = static_cast<std::int64_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int i = 0; i < m; ++i) {
        const double* ai = A + static_cast<std::int64_t>(i) * k;
        double* ci = C + static_cast<std::int64_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = B + static_cast<std::int64_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] = accumulate ? ci[j] + acc : acc;
        }
    }
}

void gemm_tn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate) {
    const std::int64_t work = static_cast<std::int64_t>(m) * k * n;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int i = 0; i < m; ++i) {
        double* ci = C + static_cast<std::int64_t>(i) * n;
        if (!accumulate) std::fill(ci, ci + n, 0.0);
        for (int p = 0; p < k; ++p) {
            const double a = A[static_cast<std::int64_t>(p) * m + i];
            const double* bp = B + static_cast<std::int64_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

void softmax_rows(const double* x, double* y, std::int64_t rows, int cols) {
    const std::int64_t work = rows * cols;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        double* yr = y + r * cols;
        double mx = xr[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
        double sum = 0.0;
        for (int c = 0; c < cols; ++c) {
            yr[c] = std::exp(xr[c] - mx);
            sum += yr[c];
        }
        const double inv = 1.0 / sum;
        for (int c = 0; c < cols; ++c) yr[c] *= inv;
    }
}

void conv1d_same(const double* x, const double* w, const double* b, double* y,
                 int L, int Cin, int Cout, int K) {
    const int pad = K / 2;
    const std::int64_t work = static_cast<std::int64_t>(L) * Cin * Cout * K;
#pragma omp parallel for schedule(static) if (work > kMinWork)
    for (int l = 0; l < L; ++l) {
        double* yl = y + static_cast<std::int64_t>(l) * Cout;
        for (int co = 0; co < Cout; ++co) yl[co] = b ? b[co] : 0.0;
        for (int dk = 0; dk < K; ++dk) {
            const int src = l + dk - pad;
            if (src < 0 || src >= L) continue;
            const double* xs = x + static_cast<std::int64_t>(src) * Cin;
            const double* wk = w + static_cast<std::int64_t>(dk) * Cin * Cout;
            for (int ci = 0; ci < Cin; ++ci) {
                const double xv = xs[ci];
                const double* wc = wk + static_cast<std::int64_t>(ci) * Cout;
                for (int co = 0; co < Cout; ++co) yl[co] += xv * wc[co];
            }
        }
    }
}

void depthwise_same(const double* x, const double* w, const double* b, double* y,
                    int T, int M, int D, int K, int axis) {
    const int pad = K / 2;
    const std::int64_t total = static_cast<std::int64_t>(T) * M * D;
#pragma omp parallel for schedule(static) if (total * K > kMinWork)
    for (std::int64_t idx = 0; idx < total; ++idx) {
        const int d = static_cast<int>(idx % D);
        const int m = static_cast<int>((idx / D) % M);
        const int t = static_cast<int>(idx / (static_cast<std::int64_t>(D) * M));
        double acc = b ? b[d] : 0.0;
        for (int dk = 0; dk < K; ++dk) {
            int src_t = t, src_m = m;
            if (axis == 0)
                src_t = t + dk - pad;
            else
                src_m = m + dk - pad;
            if (src_t < 0 || src_t >= T || src_m < 0 || src_m >= M) continue;
            acc += x[(static_cast<std::int64_t>(src_t) * M + src_m) * D + d] * w[static_cast<std::int64_t>(dk) * D + d];
        }
        y[idx] = acc;
    }
}

double sum_chunked(const double* x, std::int64_t n) {
    constexpr std::int64_t chunk = 1024;
    const std::int64_t nchunks = (n + chunk - 1) / chunk;
    std::vector<double> parts(static_cast<std::size_t>(nchunks), 0.0);
#pragma omp parallel for schedule(static) if (n > kMinWork)
    for (std::int64_t c = 0; c < nchunks; ++c) {
        const std::int64_t lo = c * chunk;
        const std::int64_t hi = std::min(n, lo + chunk);
        double part = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) part += x[i];
        parts[static_cast<std::size_t>(c)] = part;
    }
    double total = 0.0;
    for (double p : parts) total += p;
    return total;
}

}  // namespace tric::core::kern::omp
