// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

namespace tric::core {

struct FdReport {
    double max_rel_err{0.0};
    bool pass{false};
    int checked{0};
};

/// Central-difference gradient check, the project's independent oracle.
///
/// `f` re-evaluates the scalar objective from the coordinates' current
/// values; it must be deterministic (verified by evaluating twice). Each
/// coordinate in `coords` is nudged by +/- step; the resulting quotient
/// is compared to `analytic` at the same index. A pair passes when the
/// relative error is within `tol`, or both magnitudes are below the
/// 1e-8 absolute floor (vanishing gradients).
FdReport finite_diff_check(const std::function<double()>& f,
                           std::span<double* const> coords,
                           std::span<const double> analytic,
                           double step, double tol);

}  // namespace tric::core
