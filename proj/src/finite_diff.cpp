// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#include "tric/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tric::core {

FdReport finite_diff_check(const std::function<double()>& f,
                           std::span<double* const> coords,
                           std::span<const double> analytic,
                           double step, double tol) {
    if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be positive");
    if (coords.size() != analytic.size())
        throw std::invalid_argument("finite_diff_check: coordinate/gradient count mismatch");

    const double base0 = f();
    const double base1 = f();
    if (base0 != base1) throw std::runtime_error("finite_diff_check: objective is not deterministic");

    constexpr double kAbsFloor = 1e-8;
    FdReport rep;
    rep.pass = true;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        double* p = coords[i];
        const double saved = *p;
        *p = saved + step;
        const double fp = f();
        *p = saved - step;
        const double fm = f();
        *p = saved;
        const double fd = (fp - fm) / (2.0 * step);
        const double an = analytic[i];
        if (std::abs(fd) < kAbsFloor && std::abs(an) < kAbsFloor) {
            ++rep.checked;
            continue;
        }
        const double rel = std::abs(fd - an) / std::max(std::abs(fd), std::abs(an));
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        if (rel > tol) rep.pass = false;
        ++rep.checked;
    }
    return rep;
}

}  // namespace tric::core
