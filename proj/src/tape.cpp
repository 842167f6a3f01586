// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#include "tric/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tric/kernels.hpp"

namespace tric::core {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTwoPi = 6.28318530717958647692;

std::int64_t prod(const std::vector<int>& shape, int from, int to) {
    std::int64_t p = 1;
    for (int i = from; i < to; ++i) p *= shape[static_cast<std::size_t>(i)];
    return p;
}

// Strides of `in` aligned to an output of rank `out_rank`; broadcast axes get 0.
std::vector<std::int64_t> aligned_strides(const Tensor& in, const std::vector<int>& out_shape) {
    const int out_rank = static_cast<int>(out_shape.size());
    const int in_rank = in.rank();
    const auto st = in.strides();
    std::vector<std::int64_t> out(static_cast<std::size_t>(out_rank), 0);
    for (int d = 0; d < in_rank; ++d) {
        const int od = out_rank - in_rank + d;
        if (in.dim(d) == out_shape[static_cast<std::size_t>(od)])
            out[static_cast<std::size_t>(od)] = st[static_cast<std::size_t>(d)];
        else if (in.dim(d) == 1)
            out[static_cast<std::size_t>(od)] = 0;
        else
            throw std::invalid_argument("broadcast: incompatible shapes " + in.shape_str() + " vs " +
                                        Tensor::shape_str(out_shape));
    }
    return out;
}

template <class F>
void bcast_apply(const Tensor& a, const Tensor& b, Tensor& out, F&& f) {
    if (a.same_shape(b)) {
        for (std::int64_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
        return;
    }
    // Trailing-suffix fast paths (bias adds, channel gates).
    const auto& os = out.shape();
    auto is_suffix = [&](const Tensor& t) {
        if (t.rank() > static_cast<int>(os.size())) return false;
        for (int d = 0; d < t.rank(); ++d)
            if (t.dim(d) != os[os.size() - static_cast<std::size_t>(t.rank()) + static_cast<std::size_t>(d)])
                return false;
        return true;
    };
    if (a.same_shape(out) && is_suffix(b)) {
        const std::int64_t nb = b.size();
        for (std::int64_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i % nb]);
        return;
    }
    if (b.same_shape(out) && is_suffix(a)) {
        const std::int64_t na = a.size();
        for (std::int64_t i = 0; i < out.size(); ++i) out[i] = f(a[i % na], b[i]);
        return;
    }
    const auto sa = aligned_strides(a, os);
    const auto sb = aligned_strides(b, os);
    const int rank = static_cast<int>(os.size());
    std::vector<int> idx(static_cast<std::size_t>(rank), 0);
    std::int64_t ia = 0, ib = 0;
    for (std::int64_t io = 0; io < out.size(); ++io) {
        out[io] = f(a[ia], b[ib]);
        for (int ax = rank - 1; ax >= 0; --ax) {
            ++idx[static_cast<std::size_t>(ax)];
            ia += sa[static_cast<std::size_t>(ax)];
            ib += sb[static_cast<std::size_t>(ax)];
            if (idx[static_cast<std::size_t>(ax)] < os[static_cast<std::size_t>(ax)]) break;
            idx[static_cast<std::size_t>(ax)] = 0;
            ia -= sa[static_cast<std::size_t>(ax)] * os[static_cast<std::size_t>(ax)];
            ib -= sb[static_cast<std::size_t>(ax)] * os[static_cast<std::size_t>(ax)];
        }
    }
}

struct AxisSplit {
    std::int64_t outer, axis, inner;
};

AxisSplit split_at(const std::vector<int>& shape, int axis) {
    const int r = static_cast<int>(shape.size());
    if (axis < 0 || axis >= r) throw std::invalid_argument("axis out of range");
    return {prod(shape, 0, axis), shape[static_cast<std::size_t>(axis)], prod(shape, axis + 1, r)};
}

// Shared DFT plumbing: cos/sin tables for length L and K = L/2+1 bins.
struct DftTables {
    int L{0}, K{0};
    std::vector<double> c, s;  // [K*L]
};

DftTables dft_tables(int L) {
    DftTables t;
    t.L = L;
    t.K = L / 2 + 1;
    t.c.resize(static_cast<std::size_t>(t.K) * L);
    t.s.resize(static_cast<std::size_t>(t.K) * L);
    for (int k = 0; k < t.K; ++k)
        for (int n = 0; n < L; ++n) {
            const double ang = kTwoPi * k * n / L;
            t.c[static_cast<std::size_t>(k) * L + n] = std::cos(ang);
            t.s[static_cast<std::size_t>(k) * L + n] = std::sin(ang);
        }
    return t;
}

double irfft_bin_weight(int k, int L) {
    if (k == 0) return 1.0;
    if (L % 2 == 0 && k == L / 2) return 1.0;
    return 2.0;
}

}  // namespace

std::vector<int> broadcast_shape(const std::vector<int>& a, const std::vector<int>& b) {
    const int r = static_cast<int>(std::max(a.size(), b.size()));
    std::vector<int> out(static_cast<std::size_t>(r), 1);
    for (int i = 0; i < r; ++i) {
        const int da = i < static_cast<int>(a.size()) ? a[a.size() - 1 - static_cast<std::size_t>(i)] : 1;
        const int db = i < static_cast<int>(b.size()) ? b[b.size() - 1 - static_cast<std::size_t>(i)] : 1;
        if (da != db && da != 1 && db != 1)
            throw std::invalid_argument("broadcast: incompatible shapes " + Tensor::shape_str(a) + " vs " +
                                        Tensor::shape_str(b));
        out[static_cast<std::size_t>(r - 1 - i)] = std::max(da, db);
    }
    return out;
}

Tensor reduce_to_shape(const Tensor& g, const std::vector<int>& target) {
    if (g.shape() == target) return g;
    Tensor out(target);
    const auto st = aligned_strides(out, g.shape());
    const int rank = g.rank();
    std::vector<int> idx(static_cast<std::size_t>(rank), 0);
    std::int64_t it = 0;
    for (std::int64_t ig = 0; ig < g.size(); ++ig) {
        out[it] += g[ig];
        for (int ax = rank - 1; ax >= 0; --ax) {
            ++idx[static_cast<std::size_t>(ax)];
            it += st[static_cast<std::size_t>(ax)];
            if (idx[static_cast<std::size_t>(ax)] < g.dim(ax)) break;
            idx[static_cast<std::size_t>(ax)] = 0;
            it -= st[static_cast<std::size_t>(ax)] * g.dim(ax);
        }
    }
    return out;
}

// ---------------------------------------------------------------- tape core

Var Tape::make(Tensor v, bool rg, std::function<void(Tape&, const Tensor&)> back) {
    nodes_.push_back(Node{std::move(v), Tensor{}, rg, false, std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) throw std::out_of_range("invalid Var");
    return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::leaf(Tensor value, bool requires_grad) { return make(std::move(value), requires_grad, nullptr); }

const Tensor& Tape::val(Var v) const { return node(v).v; }

bool Tape::requires_grad(Var v) const { return node(v).rg; }

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (!n.grad_set) {
        static thread_local Tensor zero;
        zero = Tensor(n.v.shape());
        return zero;
    }
    return n.g;
}

bool Tape::any_rg(std::initializer_list<Var> vs) const {
    for (Var v : vs)
        if (node(v).rg) return true;
    return false;
}

void Tape::accum(Var v, Tensor g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (!n.rg) return;
    if (!n.v.same_shape(g))
        throw std::logic_error("gradient shape mismatch: " + n.v.shape_str() + " vs " + g.shape_str());
    if (!n.grad_set) {
        n.g = std::move(g);
        n.grad_set = true;
    } else {
        for (std::int64_t i = 0; i < n.g.size(); ++i) n.g[i] += g[i];
    }
}

void Tape::accum_inplace(Var v, const Tensor& g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (!n.rg) return;
    if (!n.grad_set) {
        n.g = g;
        n.grad_set = true;
    } else {
        for (std::int64_t i = 0; i < n.g.size(); ++i) n.g[i] += g[i];
    }
}

void Tape::backward(Var loss) {
    if (consumed_) throw std::runtime_error("tape already consumed by a previous backward()");
    const Node& ln = node(loss);
    if (ln.v.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " + ln.v.shape_str());
    consumed_ = true;
    accum(loss, Tensor::scalar(1.0));
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.grad_set || !n.back) continue;
        n.back(*this, n.g);
    }
}

// ---------------------------------------------------------------- arithmetic

Var Tape::add(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    Tensor out(broadcast_shape(va.shape(), vb.shape()));
    bcast_apply(va, vb, out, [](double x, double y) { return x + y; });
    const bool rg = any_rg({a, b});
    return make(std::move(out), rg, [a, b](Tape& t, const Tensor& g) {
        t.accum(a, reduce_to_shape(g, t.val(a).shape()));
        t.accum(b, reduce_to_shape(g, t.val(b).shape()));
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    Tensor out(broadcast_shape(va.shape(), vb.shape()));
    bcast_apply(va, vb, out, [](double x, double y) { return x * y; });
    const bool rg = any_rg({a, b});
    return make(std::move(out), rg, [a, b](Tape& t, const Tensor& g) {
        const Tensor& va = t.val(a);
        const Tensor& vb = t.val(b);
        if (t.requires_grad(a)) {
            Tensor gb(g.shape());
            bcast_apply(g, vb, gb, [](double x, double y) { return x * y; });
            t.accum(a, reduce_to_shape(gb, va.shape()));
        }
        if (t.requires_grad(b)) {
            Tensor ga(g.shape());
            bcast_apply(g, va, ga, [](double x, double y) { return x * y; });
            t.accum(b, reduce_to_shape(ga, vb.shape()));
        }
    });
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::sub(Var a, Var b) { return add(a, neg(b)); }

Var Tape::scale(Var a, double c) {
    const Tensor& va = val(a);
    Tensor out(va.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = c * va[i];
    return make(std::move(out), node(a).rg, [a, c](Tape& t, const Tensor& g) {
        Tensor ga(g.shape());
        for (std::int64_t i = 0; i < g.size(); ++i) ga[i] = c * g[i];
        t.accum(a, std::move(ga));
    });
}

// ------------------------------------------------------------ linear algebra

Var Tape::matmul(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    if (va.rank() < 2 || vb.rank() != 2)
        throw std::invalid_argument("matmul: need a rank>=2 and b rank 2, got " + va.shape_str() + " x " +
                                    vb.shape_str());
    const int k = va.dim(va.rank() - 1);
    if (k != vb.dim(0))
        throw std::invalid_argument("matmul: inner extents differ " + va.shape_str() + " x " + vb.shape_str());
    const int m = vb.dim(1);
    const std::int64_t rows = va.size() / k;
    std::vector<int> os(va.shape());
    os.back() = m;
    Tensor out(os);
    kern::gemm_nn(va.data(), vb.data(), out.data(), static_cast<int>(rows), k, m, false);
    return make(std::move(out), any_rg({a, b}), [a, b, rows, k, m](Tape& t, const Tensor& g) {
        const Tensor& va = t.val(a);
        const Tensor& vb = t.val(b);
        if (t.requires_grad(a)) {
            Tensor ga(va.shape());
            kern::gemm_nt(g.data(), vb.data(), ga.data(), static_cast<int>(rows), m, k, false);
            t.accum(a, std::move(ga));
        }
        if (t.requires_grad(b)) {
            Tensor gb(vb.shape());
            kern::gemm_tn(va.data(), g.data(), gb.data(), k, static_cast<int>(rows), m, false);
            t.accum(b, std::move(gb));
        }
    });
}

Var Tape::bmm(Var a, Var b) {
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    if (va.rank() < 2 || va.rank() != vb.rank())
        throw std::invalid_argument("bmm: rank mismatch " + va.shape_str() + " x " + vb.shape_str());
    const int r = va.rank();
    for (int d = 0; d + 2 < r; ++d)
        if (va.dim(d) != vb.dim(d))
            throw std::invalid_argument("bmm: batch dims differ " + va.shape_str() + " x " + vb.shape_str());
    const int n = va.dim(r - 2), k = va.dim(r - 1), m = vb.dim(r - 1);
    if (k != vb.dim(r - 2))
        throw std::invalid_argument("bmm: inner extents differ " + va.shape_str() + " x " + vb.shape_str());
    const std::int64_t batch = prod(va.shape(), 0, r - 2);
    std::vector<int> os(va.shape());
    os[static_cast<std::size_t>(r - 1)] = m;
    Tensor out(os);
    for (std::int64_t i = 0; i < batch; ++i)
        kern::gemm_nn(va.data() + i * n * k, vb.data() + i * k * m, out.data() + i * n * m, n, k, m, false);
    return make(std::move(out), any_rg({a, b}), [a, b, batch, n, k, m](Tape& t, const Tensor& g) {
        const Tensor& va = t.val(a);
        const Tensor& vb = t.val(b);
        if (t.requires_grad(a)) {
            Tensor ga(va.shape());
            for (std::int64_t i = 0; i < batch; ++i)
                kern::gemm_nt(g.data() + i * n * m, vb.data() + i * k * m, ga.data() + i * n * k, n, m, k, false);
            t.accum(a, std::move(ga));
        }
        if (t.requires_grad(b)) {
            Tensor gb(vb.shape());
            for (std::int64_t i = 0; i < batch; ++i)
                kern::gemm_tn(va.data() + i * n * k, g.data() + i * n * m, gb.data() + i * k * m, k, n, m, false);
            t.accum(b, std::move(gb));
        }
    });
}

Var Tape::lmatmul(Var a, Var x) {
    const Tensor& va = val(a);
    const Tensor& vx = val(x);
    if (va.rank() != 2 || vx.rank() < 2)
        throw std::invalid_argument("lmatmul: need a rank 2 and x rank>=2, got " + va.shape_str() + " x " +
                                    vx.shape_str());
    const int n = va.dim(0), k = va.dim(1);
    const int r = vx.rank();
    if (vx.dim(r - 2) != k)
        throw std::invalid_argument("lmatmul: extents differ " + va.shape_str() + " x " + vx.shape_str());
    const int m = vx.dim(r - 1);
    const std::int64_t batch = prod(vx.shape(), 0, r - 2);
    std::vector<int> os(vx.shape());
    os[static_cast<std::size_t>(r - 2)] = n;
    Tensor out(os);
    for (std::int64_t i = 0; i < batch; ++i)
        kern::gemm_nn(va.data(), vx.data() + i * k * m, out.data() + i * n * m, n, k, m, false);
    return make(std::move(out), any_rg({a, x}), [a, x, batch, n, k, m](Tape& t, const Tensor& g) {
        const Tensor& va = t.val(a);
        const Tensor& vx = t.val(x);
        if (t.requires_grad(a)) {
            Tensor ga(va.shape());
            for (std::int64_t i = 0; i < batch; ++i)
                kern::gemm_nt(g.data() + i * n * m, vx.data() + i * k * m, ga.data(), n, m, k, true);
            t.accum(a, std::move(ga));
        }
        if (t.requires_grad(x)) {
            Tensor gx(vx.shape());
            for (std::int64_t i = 0; i < batch; ++i)
                kern::gemm_tn(va.data(), g.data() + i * n * m, gx.data() + i * k * m, k, n, m, false);
            t.accum(x, std::move(gx));
        }
    });
}

// ------------------------------------------------------------------- shape

Var Tape::transpose(Var a, std::vector<int> perm) {
    const Tensor& va = val(a);
    const int r = va.rank();
    if (static_cast<int>(perm.size()) != r) throw std::invalid_argument("transpose: perm rank mismatch");
    std::vector<bool> seen(static_cast<std::size_t>(r), false);
    for (int p : perm) {
        if (p < 0 || p >= r || seen[static_cast<std::size_t>(p)])
            throw std::invalid_argument("transpose: invalid permutation");
        seen[static_cast<std::size_t>(p)] = true;
    }
    std::vector<int> os(static_cast<std::size_t>(r));
    for (int d = 0; d < r; ++d) os[static_cast<std::size_t>(d)] = va.dim(perm[static_cast<std::size_t>(d)]);
    Tensor out(os);
    const auto ist = va.strides();
    std::vector<std::int64_t> map_st(static_cast<std::size_t>(r));
    for (int d = 0; d < r; ++d) map_st[static_cast<std::size_t>(d)] = ist[static_cast<std::size_t>(perm[static_cast<std::size_t>(d)])];
    std::vector<int> idx(static_cast<std::size_t>(r), 0);
    std::int64_t src = 0;
    for (std::int64_t io = 0; io < out.size(); ++io) {
        out[io] = va[src];
        for (int ax = r - 1; ax >= 0; --ax) {
            ++idx[static_cast<std::size_t>(ax)];
            src += map_st[static_cast<std::size_t>(ax)];
            if (idx[static_cast<std::size_t>(ax)] < os[static_cast<std::size_t>(ax)]) break;
            idx[static_cast<std::size_t>(ax)] = 0;
            src -= map_st[static_cast<std::size_t>(ax)] * os[static_cast<std::size_t>(ax)];
        }
    }
    // Inverse permutation for the backward pass.
    std::vector<int> inv(static_cast<std::size_t>(r));
    for (int d = 0; d < r; ++d) inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(d)])] = d;
    return make(std::move(out), node(a).rg, [a, inv](Tape& t, const Tensor& g) {
        const int r = g.rank();
        std::vector<int> os(static_cast<std::size_t>(r));
        for (int d = 0; d < r; ++d) os[static_cast<std::size_t>(d)] = g.dim(inv[static_cast<std::size_t>(d)]);
        Tensor gi(os);
        const auto gst = g.strides();
        std::vector<std::int64_t> map_st(static_cast<std::size_t>(r));
        for (int d = 0; d < r; ++d) map_st[static_cast<std::size_t>(d)] = gst[static_cast<std::size_t>(inv[static_cast<std::size_t>(d)])];
        std::vector<int> idx(static_cast<std::size_t>(r), 0);
        std::int64_t src = 0;
        for (std::int64_t io = 0; io < gi.size(); ++io) {
            gi[io] = g[src];
            for (int ax = r - 1; ax >= 0; --ax) {
                ++idx[static_cast<std::size_t>(ax)];
                src += map_st[static_cast<std::size_t>(ax)];
                if (idx[static_cast<std::size_t>(ax)] < os[static_cast<std::size_t>(ax)]) break;
                idx[static_cast<std::size_t>(ax)] = 0;
                src -= map_st[static_cast<std::size_t>(ax)] * os[static_cast<std::size_t>(ax)];
            }
        }
        t.accum(a, std::move(gi));
    });
}

Var Tape::reshape(Var a, std::vector<int> shape) {
    const Tensor& va = val(a);
    Tensor out = Tensor::from(shape, va.vec());
    return make(std::move(out), node(a).rg, [a](Tape& t, const Tensor& g) {
        t.accum(a, Tensor::from(t.val(a).shape(), g.vec()));
    });
}

Var Tape::expand(Var a, std::vector<int> shape) {
    const Tensor& va = val(a);
    Tensor out(shape);
    Tensor zero = Tensor::zeros(shape);
    bcast_apply(zero, va, out, [](double, double y) { return y; });
    return make(std::move(out), node(a).rg, [a](Tape& t, const Tensor& g) {
        t.accum(a, reduce_to_shape(g, t.val(a).shape()));
    });
}

Var Tape::concat(const std::vector<Var>& parts, int axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const Tensor& first = val(parts[0]);
    std::vector<int> os(first.shape());
    const auto base = split_at(first.shape(), axis);
    int total = 0;
    for (Var p : parts) {
        const Tensor& vp = val(p);
        if (vp.rank() != first.rank())
            throw std::invalid_argument("concat: rank mismatch " + first.shape_str() + " vs " + vp.shape_str());
        for (int d = 0; d < first.rank(); ++d)
            if (d != axis && vp.dim(d) != first.dim(d))
                throw std::invalid_argument("concat: shape mismatch " + first.shape_str() + " vs " + vp.shape_str());
        total += vp.dim(axis);
    }
    os[static_cast<std::size_t>(axis)] = total;
    Tensor out(os);
    std::vector<int> offsets;
    int off = 0;
    for (Var p : parts) {
        offsets.push_back(off);
        const Tensor& vp = val(p);
        const int ax = vp.dim(axis);
        for (std::int64_t o = 0; o < base.outer; ++o)
            std::memcpy(out.data() + (o * total + off) * base.inner, vp.data() + o * ax * base.inner,
                        static_cast<std::size_t>(ax * base.inner) * sizeof(double));
        off += ax;
    }
    bool rg = false;
    for (Var p : parts) rg = rg || node(p).rg;
    auto parts_copy = parts;
    return make(std::move(out), rg, [parts_copy, offsets, axis, base, total](Tape& t, const Tensor& g) {
        for (std::size_t i = 0; i < parts_copy.size(); ++i) {
            Var p = parts_copy[i];
            if (!t.requires_grad(p)) continue;
            const Tensor& vp = t.val(p);
            const int ax = vp.dim(axis);
            Tensor gp(vp.shape());
            for (std::int64_t o = 0; o < base.outer; ++o)
                std::memcpy(gp.data() + o * ax * base.inner, g.data() + (o * total + offsets[i]) * base.inner,
                            static_cast<std::size_t>(ax * base.inner) * sizeof(double));
            t.accum(p, std::move(gp));
        }
    });
}

Var Tape::slice(Var a, int axis, int start, int len) {
    const Tensor& va = val(a);
    const auto sp = split_at(va.shape(), axis);
    if (start < 0 || len < 1 || start + len > sp.axis)
        throw std::invalid_argument("slice: window [" + std::to_string(start) + ", " + std::to_string(start + len) +
                                    ") out of range for extent " + std::to_string(sp.axis));
    std::vector<int> os(va.shape());
    os[static_cast<std::size_t>(axis)] = len;
    Tensor out(os);
    for (std::int64_t o = 0; o < sp.outer; ++o)
        std::memcpy(out.data() + o * len * sp.inner, va.data() + (o * sp.axis + start) * sp.inner,
                    static_cast<std::size_t>(len * sp.inner) * sizeof(double));
    return make(std::move(out), node(a).rg, [a, sp, start, len](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        for (std::int64_t o = 0; o < sp.outer; ++o)
            std::memcpy(ga.data() + (o * sp.axis + start) * sp.inner, g.data() + o * len * sp.inner,
                        static_cast<std::size_t>(len * sp.inner) * sizeof(double));
        t.accum(a, std::move(ga));
    });
}

// ------------------------------------------------------------ nonlinearities

Var Tape::relu(Var a) {
    const Tensor& va = val(a);
    Tensor out(va.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = va[i] > 0.0 ? va[i] : 0.0;
    return make(std::move(out), node(a).rg, [a](Tape& t, const Tensor& g) {
        const Tensor& va = t.val(a);
        Tensor ga(va.shape());
        for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] = va[i] > 0.0 ? g[i] : 0.0;
        t.accum(a, std::move(ga));
    });
}

Var Tape::gelu(Var a) {
    const Tensor& va = val(a);
    Tensor out(va.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = 0.5 * va[i] * (1.0 + std::erf(va[i] * kInvSqrt2));
    return make(std::move(out), node(a).rg, [a](Tape& t, const Tensor& g) {
        const Tensor& va = t.val(a);
        Tensor ga(va.shape());
        constexpr double inv_sqrt_2pi = 0.39894228040143267794;
        for (std::int64_t i = 0; i < ga.size(); ++i) {
            const double x = va[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
            ga[i] = g[i] * (cdf + x * pdf);
        }
        t.accum(a, std::move(ga));
    });
}

Var Tape::sigmoid(Var a) {
    const Tensor& va = val(a);
    Tensor out(va.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-va[i]));
    const int out_id = static_cast<int>(nodes_.size());
    return make(std::move(out), node(a).rg, [a, out_id](Tape& t, const Tensor& g) {
        const Tensor& y = t.val(Var{out_id});
        Tensor ga(y.shape());
        for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] = g[i] * y[i] * (1.0 - y[i]);
        t.accum(a, std::move(ga));
    });
}

Var Tape::softmax_last(Var a) {
    const Tensor& va = val(a);
    const int cols = va.dim(va.rank() - 1);
    const std::int64_t rows = va.size() / cols;
    Tensor out(va.shape());
    kern::softmax_rows(va.data(), out.data(), rows, cols);
    const int out_id = static_cast<int>(nodes_.size());
    return make(std::move(out), node(a).rg, [a, out_id, rows, cols](Tape& t, const Tensor& g) {
        const Tensor& y = t.val(Var{out_id});
        Tensor ga(y.shape());
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* yr = y.data() + r * cols;
            const double* gr = g.data() + r * cols;
            double dot = 0.0;
            for (int c = 0; c < cols; ++c) dot += yr[c] * gr[c];
            double* gar = ga.data() + r * cols;
            for (int c = 0; c < cols; ++c) gar[c] = yr[c] * (gr[c] - dot);
        }
        t.accum(a, std::move(ga));
    });
}

// ------------------------------------------------------------- normalisation

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
    const Tensor& vx = val(x);
    const Tensor& vg = val(gamma);
    const Tensor& vb = val(beta);
    const int C = vx.dim(vx.rank() - 1);
    if (vg.size() != C || vb.size() != C)
        throw std::invalid_argument("layer_norm: gamma/beta must have " + std::to_string(C) + " entries");
    const std::int64_t rows = vx.size() / C;
    Tensor out(vx.shape());
    Tensor mean({static_cast<int>(rows)});
    Tensor rstd({static_cast<int>(rows)});
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xr = vx.data() + r * C;
        double mu = 0.0;
        for (int c = 0; c < C; ++c) mu += xr[c];
        mu /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= C;
        const double rs = 1.0 / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;
        double* yr = out.data() + r * C;
        for (int c = 0; c < C; ++c) yr[c] = (xr[c] - mu) * rs * vg[c] + vb[c];
    }
    return make(std::move(out), any_rg({x, gamma, beta}),
                [x, gamma, beta, rows, C, mean, rstd](Tape& t, const Tensor& g) {
                    const Tensor& vx = t.val(x);
                    const Tensor& vg = t.val(gamma);
                    Tensor gx(vx.shape());
                    Tensor ggamma({C});
                    Tensor gbeta({C});
                    for (std::int64_t r = 0; r < rows; ++r) {
                        const double* xr = vx.data() + r * C;
                        const double* gr = g.data() + r * C;
                        const double mu = mean[r], rs = rstd[r];
                        double sum_gg = 0.0, sum_ggx = 0.0;
                        for (int c = 0; c < C; ++c) {
                            const double xh = (xr[c] - mu) * rs;
                            const double gg = gr[c] * vg[c];
                            ggamma[c] += gr[c] * xh;
                            gbeta[c] += gr[c];
                            sum_gg += gg;
                            sum_ggx += gg * xh;
                        }
                        const double m1 = sum_gg / C, m2 = sum_ggx / C;
                        double* gxr = gx.data() + r * C;
                        for (int c = 0; c < C; ++c) {
                            const double xh = (xr[c] - mu) * rs;
                            const double gg = gr[c] * vg[c];
                            gxr[c] = rs * (gg - m1 - xh * m2);
                        }
                    }
                    t.accum(x, std::move(gx));
                    t.accum(gamma, std::move(ggamma));
                    t.accum(beta, std::move(gbeta));
                });
}

Var Tape::group_norm(Var x, Var gamma, Var beta, int groups, double eps) {
    const Tensor& vx = val(x);
    const Tensor& vg = val(gamma);
    const Tensor& vb = val(beta);
    const int C = vx.dim(vx.rank() - 1);
    if (groups < 1 || C % groups != 0)
        throw std::invalid_argument("group_norm: channels " + std::to_string(C) + " not divisible by groups " +
                                    std::to_string(groups));
    if (vg.size() != C || vb.size() != C)
        throw std::invalid_argument("group_norm: gamma/beta must have " + std::to_string(C) + " entries");
    const int Dg = C / groups;
    const std::int64_t P = vx.size() / C;
    Tensor out(vx.shape());
    Tensor mean({groups});
    Tensor rstd({groups});
    for (int grp = 0; grp < groups; ++grp) {
        const int c0 = grp * Dg;
        double mu = 0.0;
        for (std::int64_t p = 0; p < P; ++p)
            for (int c = 0; c < Dg; ++c) mu += vx[p * C + c0 + c];
        mu /= static_cast<double>(P * Dg);
        double var = 0.0;
        for (std::int64_t p = 0; p < P; ++p)
            for (int c = 0; c < Dg; ++c) {
                const double d = vx[p * C + c0 + c] - mu;
                var += d * d;
            }
        var /= static_cast<double>(P * Dg);
        const double rs = 1.0 / std::sqrt(var + eps);
        mean[grp] = mu;
        rstd[grp] = rs;
        for (std::int64_t p = 0; p < P; ++p)
            for (int c = 0; c < Dg; ++c) {
                const std::int64_t i = p * C + c0 + c;
                out[i] = (vx[i] - mu) * rs * vg[c0 + c] + vb[c0 + c];
            }
    }
    return make(std::move(out), any_rg({x, gamma, beta}),
                [x, gamma, beta, groups, Dg, C, P, mean, rstd](Tape& t, const Tensor& g) {
                    const Tensor& vx = t.val(x);
                    const Tensor& vg = t.val(gamma);
                    Tensor gx(vx.shape());
                    Tensor ggamma({C});
                    Tensor gbeta({C});
                    const double region = static_cast<double>(P * Dg);
                    for (int grp = 0; grp < groups; ++grp) {
                        const int c0 = grp * Dg;
                        const double mu = mean[grp], rs = rstd[grp];
                        double sum_gg = 0.0, sum_ggx = 0.0;
                        for (std::int64_t p = 0; p < P; ++p)
                            for (int c = 0; c < Dg; ++c) {
                                const std::int64_t i = p * C + c0 + c;
                                const double xh = (vx[i] - mu) * rs;
                                const double gg = g[i] * vg[c0 + c];
                                ggamma[c0 + c] += g[i] * xh;
                                gbeta[c0 + c] += g[i];
                                sum_gg += gg;
                                sum_ggx += gg * xh;
                            }
                        const double m1 = sum_gg / region, m2 = sum_ggx / region;
                        for (std::int64_t p = 0; p < P; ++p)
                            for (int c = 0; c < Dg; ++c) {
                                const std::int64_t i = p * C + c0 + c;
                                const double xh = (vx[i] - mu) * rs;
                                const double gg = g[i] * vg[c0 + c];
                                gx[i] = rs * (gg - m1 - xh * m2);
                            }
                    }
                    t.accum(x, std::move(gx));
                    t.accum(gamma, std::move(ggamma));
                    t.accum(beta, std::move(gbeta));
                });
}

// -------------------------------------------------------------- convolution

Var Tape::conv1d(Var x, Var w, Var b) {
    const Tensor& vx = val(x);
    const Tensor& vw = val(w);
    const Tensor& vb = val(b);
    if (vx.rank() != 2 || vw.rank() != 3)
        throw std::invalid_argument("conv1d: x must be [L,Cin], w [K,Cin,Cout], got " + vx.shape_str() + ", " +
                                    vw.shape_str());
    const int L = vx.dim(0), Cin = vx.dim(1);
    const int K = vw.dim(0), Cout = vw.dim(2);
    if (vw.dim(1) != Cin || vb.size() != Cout || K % 2 == 0)
        throw std::invalid_argument("conv1d: weight shape " + vw.shape_str() + " incompatible with input " +
                                    vx.shape_str());
    Tensor out({L, Cout});
    kern::conv1d_same(vx.data(), vw.data(), vb.data(), out.data(), L, Cin, Cout, K);
    return make(std::move(out), any_rg({x, w, b}), [x, w, b, L, Cin, Cout, K](Tape& t, const Tensor& g) {
        const Tensor& vx = t.val(x);
        const Tensor& vw = t.val(w);
        const int pad = K / 2;
        if (t.requires_grad(x)) {
            Tensor gx({L, Cin});
            for (int s = 0; s < L; ++s)
                for (int ci = 0; ci < Cin; ++ci) {
                    double acc = 0.0;
                    for (int dk = 0; dk < K; ++dk) {
                        const int l = s - dk + pad;
                        if (l < 0 || l >= L) continue;
                        const double* wk = vw.data() + (static_cast<std::int64_t>(dk) * Cin + ci) * Cout;
                        const double* gl = g.data() + static_cast<std::int64_t>(l) * Cout;
                        for (int co = 0; co < Cout; ++co) acc += gl[co] * wk[co];
                    }
                    gx[static_cast<std::int64_t>(s) * Cin + ci] = acc;
                }
            t.accum(x, std::move(gx));
        }
        if (t.requires_grad(w)) {
            Tensor gw({K, Cin, Cout});
            for (int dk = 0; dk < K; ++dk)
                for (int l = 0; l < L; ++l) {
                    const int src = l + dk - pad;
                    if (src < 0 || src >= L) continue;
                    const double* xs = vx.data() + static_cast<std::int64_t>(src) * Cin;
                    const double* gl = g.data() + static_cast<std::int64_t>(l) * Cout;
                    for (int ci = 0; ci < Cin; ++ci) {
                        double* gwp = gw.data() + (static_cast<std::int64_t>(dk) * Cin + ci) * Cout;
                        for (int co = 0; co < Cout; ++co) gwp[co] += xs[ci] * gl[co];
                    }
                }
            t.accum(w, std::move(gw));
        }
        if (t.requires_grad(b)) {
            Tensor gb({Cout});
            for (int l = 0; l < L; ++l)
                for (int co = 0; co < Cout; ++co) gb[co] += g[static_cast<std::int64_t>(l) * Cout + co];
            t.accum(b, std::move(gb));
        }
    });
}

Var Tape::depthwise_conv(Var x, Var w, Var b, int axis) {
    const Tensor& vx = val(x);
    const Tensor& vw = val(w);
    const Tensor& vb = val(b);
    if (vx.rank() != 3 || vw.rank() != 2 || (axis != 0 && axis != 1))
        throw std::invalid_argument("depthwise_conv: x must be [T,M,D], axis 0|1, got " + vx.shape_str());
    const int T = vx.dim(0), M = vx.dim(1), D = vx.dim(2);
    const int K = vw.dim(0);
    if (vw.dim(1) != D || vb.size() != D || K % 2 == 0)
        throw std::invalid_argument("depthwise_conv: weight shape " + vw.shape_str() + " incompatible with " +
                                    vx.shape_str());
    Tensor out({T, M, D});
    kern::depthwise_same(vx.data(), vw.data(), vb.data(), out.data(), T, M, D, K, axis);
    return make(std::move(out), any_rg({x, w, b}), [x, w, b, T, M, D, K, axis](Tape& t, const Tensor& g) {
        const Tensor& vx = t.val(x);
        const Tensor& vw = t.val(w);
        const int pad = K / 2;
        const int ext = axis == 0 ? T : M;
        auto index = [&](int tt, int mm, int d) { return (static_cast<std::int64_t>(tt) * M + mm) * D + d; };
        if (t.requires_grad(x)) {
            Tensor gx({T, M, D});
            for (int tt = 0; tt < T; ++tt)
                for (int mm = 0; mm < M; ++mm)
                    for (int d = 0; d < D; ++d) {
                        double acc = 0.0;
                        const int pos = axis == 0 ? tt : mm;
                        for (int dk = 0; dk < K; ++dk) {
                            const int outp = pos - dk + pad;
                            if (outp < 0 || outp >= ext) continue;
                            const std::int64_t gi = axis == 0 ? index(outp, mm, d) : index(tt, outp, d);
                            acc += g[gi] * vw[static_cast<std::int64_t>(dk) * D + d];
                        }
                        gx[index(tt, mm, d)] = acc;
                    }
            t.accum(x, std::move(gx));
        }
        if (t.requires_grad(w)) {
            Tensor gw({K, D});
            for (int dk = 0; dk < K; ++dk)
                for (int tt = 0; tt < T; ++tt)
                    for (int mm = 0; mm < M; ++mm) {
                        int st = tt, sm = mm;
                        if (axis == 0)
                            st = tt + dk - pad;
                        else
                            sm = mm + dk - pad;
                        if (st < 0 || st >= T || sm < 0 || sm >= M) continue;
                        for (int d = 0; d < D; ++d)
                            gw[static_cast<std::int64_t>(dk) * D + d] += g[index(tt, mm, d)] * vx[index(st, sm, d)];
                    }
            t.accum(w, std::move(gw));
        }
        if (t.requires_grad(b)) {
            Tensor gb({D});
            for (std::int64_t i = 0; i < g.size(); ++i) gb[i % D] += g[i];
            t.accum(b, std::move(gb));
        }
    });
}

// ------------------------------------------------------ reductions / pooling

Var Tape::mean_axis(Var a, int axis) {
    const Tensor& va = val(a);
    if (va.rank() < 2) throw std::invalid_argument("mean_axis: rank must be >= 2");
    const auto sp = split_at(va.shape(), axis);
    std::vector<int> os;
    for (int d = 0; d < va.rank(); ++d)
        if (d != axis) os.push_back(va.dim(d));
    Tensor out(os);
    const double inv = 1.0 / sp.axis;
    for (std::int64_t o = 0; o < sp.outer; ++o)
        for (std::int64_t i = 0; i < sp.inner; ++i) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < sp.axis; ++k) acc += va[(o * sp.axis + k) * sp.inner + i];
            out[o * sp.inner + i] = acc * inv;
        }
    return make(std::move(out), node(a).rg, [a, sp](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        const double inv = 1.0 / sp.axis;
        for (std::int64_t o = 0; o < sp.outer; ++o)
            for (std::int64_t k = 0; k < sp.axis; ++k)
                for (std::int64_t i = 0; i < sp.inner; ++i)
                    ga[(o * sp.axis + k) * sp.inner + i] = g[o * sp.inner + i] * inv;
        t.accum(a, std::move(ga));
    });
}

Var Tape::sum_all(Var a) {
    const Tensor& va = val(a);
    Tensor out = Tensor::scalar(kern::sum_chunked(va.data(), va.size()));
    return make(std::move(out), node(a).rg, [a](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::full(t.val(a).shape(), g[0]);
        t.accum(a, std::move(ga));
    });
}

Var Tape::mean_all(Var a) {
    const Tensor& va = val(a);
    const double n = static_cast<double>(va.size());
    Tensor out = Tensor::scalar(kern::sum_chunked(va.data(), va.size()) / n);
    return make(std::move(out), node(a).rg, [a, n](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::full(t.val(a).shape(), g[0] / n);
        t.accum(a, std::move(ga));
    });
}

Var Tape::mean_positions(Var a) {
    const Tensor& va = val(a);
    if (va.rank() != 3) throw std::invalid_argument("mean_positions: need rank 3, got " + va.shape_str());
    const int D = va.dim(2);
    const std::int64_t P = va.size() / D;
    Tensor out({D});
    for (std::int64_t p = 0; p < P; ++p)
        for (int d = 0; d < D; ++d) out[d] += va[p * D + d];
    for (int d = 0; d < D; ++d) out[d] /= static_cast<double>(P);
    return make(std::move(out), node(a).rg, [a, P, D](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        const double inv = 1.0 / static_cast<double>(P);
        for (std::int64_t p = 0; p < P; ++p)
            for (int d = 0; d < D; ++d) ga[p * D + d] = g[d] * inv;
        t.accum(a, std::move(ga));
    });
}

Var Tape::max_positions(Var a) {
    const Tensor& va = val(a);
    if (va.rank() != 3) throw std::invalid_argument("max_positions: need rank 3, got " + va.shape_str());
    const int D = va.dim(2);
    const std::int64_t P = va.size() / D;
    Tensor out({D});
    std::vector<std::int64_t> arg(static_cast<std::size_t>(D), 0);
    for (int d = 0; d < D; ++d) {
        double best = va[d];
        std::int64_t bp = 0;
        for (std::int64_t p = 1; p < P; ++p) {
            const double v = va[p * D + d];
            if (v > best) {
                best = v;
                bp = p;
            }
        }
        out[d] = best;
        arg[static_cast<std::size_t>(d)] = bp;
    }
    return make(std::move(out), node(a).rg, [a, arg, D](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        for (int d = 0; d < D; ++d) ga[arg[static_cast<std::size_t>(d)] * D + d] = g[d];
        t.accum(a, std::move(ga));
    });
}

Var Tape::avgpool_frames(Var a, int stride) {
    const Tensor& va = val(a);
    if (va.rank() != 3) throw std::invalid_argument("avgpool_frames: need rank 3, got " + va.shape_str());
    if (stride < 1) throw std::invalid_argument("avgpool_frames: stride must be >= 1");
    const int L = va.dim(0);
    const std::int64_t inner = va.size() / L;
    const int Lo = (L + stride - 1) / stride;
    std::vector<int> os(va.shape());
    os[0] = Lo;
    Tensor out(os);
    for (int n = 0; n < Lo; ++n) {
        const int lo = n * stride;
        const int hi = std::min(L, lo + stride);
        const double inv = 1.0 / (hi - lo);
        for (std::int64_t i = 0; i < inner; ++i) {
            double acc = 0.0;
            for (int l = lo; l < hi; ++l) acc += va[static_cast<std::int64_t>(l) * inner + i];
            out[static_cast<std::int64_t>(n) * inner + i] = acc * inv;
        }
    }
    return make(std::move(out), node(a).rg, [a, stride, L, Lo, inner](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        for (int n = 0; n < Lo; ++n) {
            const int lo = n * stride;
            const int hi = std::min(L, lo + stride);
            const double inv = 1.0 / (hi - lo);
            for (int l = lo; l < hi; ++l)
                for (std::int64_t i = 0; i < inner; ++i)
                    ga[static_cast<std::int64_t>(l) * inner + i] = g[static_cast<std::int64_t>(n) * inner + i] * inv;
        }
        t.accum(a, std::move(ga));
    });
}

Var Tape::repeat_frames(Var a, int stride, int out_len) {
    const Tensor& va = val(a);
    if (va.rank() != 3) throw std::invalid_argument("repeat_frames: need rank 3, got " + va.shape_str());
    if (stride < 1 || out_len < 1) throw std::invalid_argument("repeat_frames: stride and out_len must be >= 1");
    const int L = va.dim(0);
    if ((out_len - 1) / stride >= L)
        throw std::invalid_argument("repeat_frames: out_len " + std::to_string(out_len) +
                                    " too long for input frames " + std::to_string(L));
    const std::int64_t inner = va.size() / L;
    std::vector<int> os(va.shape());
    os[0] = out_len;
    Tensor out(os);
    for (int i = 0; i < out_len; ++i)
        std::memcpy(out.data() + static_cast<std::int64_t>(i) * inner,
                    va.data() + static_cast<std::int64_t>(i / stride) * inner,
                    static_cast<std::size_t>(inner) * sizeof(double));
    return make(std::move(out), node(a).rg, [a, stride, out_len, inner](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        for (int i = 0; i < out_len; ++i) {
            const std::int64_t src = static_cast<std::int64_t>(i / stride) * inner;
            for (std::int64_t j = 0; j < inner; ++j) ga[src + j] += g[static_cast<std::int64_t>(i) * inner + j];
        }
        t.accum(a, std::move(ga));
    });
}

// ------------------------------------------------------ frequency transforms

Var Tape::dwt_low(Var a) {
    const Tensor& va = val(a);
    if (va.rank() != 3) throw std::invalid_argument("dwt_low: need rank 3, got " + va.shape_str());
    const int L = va.dim(0);
    if (L == 0 || L % 2 != 0) throw std::invalid_argument("dwt_low: frame count must be even and positive");
    const std::int64_t inner = va.size() / L;
    std::vector<int> os(va.shape());
    os[0] = L / 2;
    Tensor out(os);
    for (int k = 0; k < L / 2; ++k)
        for (std::int64_t i = 0; i < inner; ++i)
            out[static_cast<std::int64_t>(k) * inner + i] =
                (va[static_cast<std::int64_t>(2 * k) * inner + i] + va[static_cast<std::int64_t>(2 * k + 1) * inner + i]) * kInvSqrt2;
    return make(std::move(out), node(a).rg, [a, L, inner](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        for (int k = 0; k < L / 2; ++k)
            for (std::int64_t i = 0; i < inner; ++i) {
                const double gv = g[static_cast<std::int64_t>(k) * inner + i] * kInvSqrt2;
                ga[static_cast<std::int64_t>(2 * k) * inner + i] = gv;
                ga[static_cast<std::int64_t>(2 * k + 1) * inner + i] = gv;
            }
        t.accum(a, std::move(ga));
    });
}

Var Tape::dwt_high(Var a) {
    const Tensor& va = val(a);
    if (va.rank() != 3) throw std::invalid_argument("dwt_high: need rank 3, got " + va.shape_str());
    const int L = va.dim(0);
    if (L == 0 || L % 2 != 0) throw std::invalid_argument("dwt_high: frame count must be even and positive");
    const std::int64_t inner = va.size() / L;
    std::vector<int> os(va.shape());
    os[0] = L / 2;
    Tensor out(os);
    for (int k = 0; k < L / 2; ++k)
        for (std::int64_t i = 0; i < inner; ++i)
            out[static_cast<std::int64_t>(k) * inner + i] =
                (va[static_cast<std::int64_t>(2 * k) * inner + i] - va[static_cast<std::int64_t>(2 * k + 1) * inner + i]) * kInvSqrt2;
    return make(std::move(out), node(a).rg, [a, L, inner](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        for (int k = 0; k < L / 2; ++k)
            for (std::int64_t i = 0; i < inner; ++i) {
                const double gv = g[static_cast<std::int64_t>(k) * inner + i] * kInvSqrt2;
                ga[static_cast<std::int64_t>(2 * k) * inner + i] = gv;
                ga[static_cast<std::int64_t>(2 * k + 1) * inner + i] = -gv;
            }
        t.accum(a, std::move(ga));
    });
}

Var Tape::idwt(Var low, Var high) {
    const Tensor& vl = val(low);
    const Tensor& vh = val(high);
    require_same_shape(vl, vh, "idwt");
    if (vl.rank() != 3) throw std::invalid_argument("idwt: need rank 3, got " + vl.shape_str());
    const int H = vl.dim(0);
    const std::int64_t inner = vl.size() / H;
    std::vector<int> os(vl.shape());
    os[0] = 2 * H;
    Tensor out(os);
    for (int k = 0; k < H; ++k)
        for (std::int64_t i = 0; i < inner; ++i) {
            const double lo = vl[static_cast<std::int64_t>(k) * inner + i];
            const double hi = vh[static_cast<std::int64_t>(k) * inner + i];
            out[static_cast<std::int64_t>(2 * k) * inner + i] = (lo + hi) * kInvSqrt2;
            out[static_cast<std::int64_t>(2 * k + 1) * inner + i] = (lo - hi) * kInvSqrt2;
        }
    return make(std::move(out), any_rg({low, high}), [low, high, H, inner](Tape& t, const Tensor& g) {
        Tensor gl(t.val(low).shape());
        Tensor gh(t.val(high).shape());
        for (int k = 0; k < H; ++k)
            for (std::int64_t i = 0; i < inner; ++i) {
                const double ge = g[static_cast<std::int64_t>(2 * k) * inner + i];
                const double go = g[static_cast<std::int64_t>(2 * k + 1) * inner + i];
                gl[static_cast<std::int64_t>(k) * inner + i] = (ge + go) * kInvSqrt2;
                gh[static_cast<std::int64_t>(k) * inner + i] = (ge - go) * kInvSqrt2;
            }
        t.accum(low, std::move(gl));
        t.accum(high, std::move(gh));
    });
}

Var Tape::rfft_frames(Var a) {
    const Tensor& va = val(a);
    if (va.rank() != 3) throw std::invalid_argument("rfft_frames: need rank 3, got " + va.shape_str());
    const int L = va.dim(0), M = va.dim(1), D = va.dim(2);
    const DftTables tb = dft_tables(L);
    const int K = tb.K;
    Tensor out({K, M, 2 * D});
    for (int k = 0; k < K; ++k) {
        const double* ck = tb.c.data() + static_cast<std::size_t>(k) * L;
        const double* sk = tb.s.data() + static_cast<std::size_t>(k) * L;
        for (int m = 0; m < M; ++m)
            for (int d = 0; d < D; ++d) {
                double re = 0.0, im = 0.0;
                for (int n = 0; n < L; ++n) {
                    const double x = va[(static_cast<std::int64_t>(n) * M + m) * D + d];
                    re += x * ck[n];
                    im -= x * sk[n];
                }
                out[(static_cast<std::int64_t>(k) * M + m) * 2 * D + d] = re;
                out[(static_cast<std::int64_t>(k) * M + m) * 2 * D + D + d] = im;
            }
    }
    return make(std::move(out), node(a).rg, [a, L, M, D, K, tb](Tape& t, const Tensor& g) {
        Tensor ga(t.val(a).shape());
        for (int n = 0; n < L; ++n)
            for (int m = 0; m < M; ++m)
                for (int d = 0; d < D; ++d) {
                    double acc = 0.0;
                    for (int k = 0; k < K; ++k) {
                        const double gre = g[(static_cast<std::int64_t>(k) * M + m) * 2 * D + d];
                        const double gim = g[(static_cast<std::int64_t>(k) * M + m) * 2 * D + D + d];
                        acc += gre * tb.c[static_cast<std::size_t>(k) * L + n] - gim * tb.s[static_cast<std::size_t>(k) * L + n];
                    }
                    ga[(static_cast<std::int64_t>(n) * M + m) * D + d] = acc;
                }
        t.accum(a, std::move(ga));
    });
}

Var Tape::irfft_frames(Var spec, int out_len) {
    const Tensor& vs = val(spec);
    if (vs.rank() != 3 || vs.dim(2) % 2 != 0)
        throw std::invalid_argument("irfft_frames: need [K,M,2D], got " + vs.shape_str());
    const int K = vs.dim(0), M = vs.dim(1), D = vs.dim(2) / 2;
    const int L = out_len;
    if (K != L / 2 + 1)
        throw std::invalid_argument("irfft_frames: bin count " + std::to_string(K) + " does not match length " +
                                    std::to_string(L));
    const DftTables tb = dft_tables(L);
    Tensor out({L, M, D});
    for (int n = 0; n < L; ++n)
        for (int m = 0; m < M; ++m)
            for (int d = 0; d < D; ++d) {
                double acc = 0.0;
                for (int k = 0; k < K; ++k) {
                    const double w = irfft_bin_weight(k, L);
                    const double re = vs[(static_cast<std::int64_t>(k) * M + m) * 2 * D + d];
                    const double im = vs[(static_cast<std::int64_t>(k) * M + m) * 2 * D + D + d];
                    acc += w * (re * tb.c[static_cast<std::size_t>(k) * L + n] - im * tb.s[static_cast<std::size_t>(k) * L + n]);
                }
                out[(static_cast<std::int64_t>(n) * M + m) * D + d] = acc / L;
            }
    return make(std::move(out), node(spec).rg, [spec, L, M, D, K, tb](Tape& t, const Tensor& g) {
        Tensor gs(t.val(spec).shape());
        for (int k = 0; k < K; ++k) {
            const double w = irfft_bin_weight(k, L) / L;
            for (int m = 0; m < M; ++m)
                for (int d = 0; d < D; ++d) {
                    double gre = 0.0, gim = 0.0;
                    for (int n = 0; n < L; ++n) {
                        const double gv = g[(static_cast<std::int64_t>(n) * M + m) * D + d];
                        gre += gv * tb.c[static_cast<std::size_t>(k) * L + n];
                        gim -= gv * tb.s[static_cast<std::size_t>(k) * L + n];
                    }
                    gs[(static_cast<std::int64_t>(k) * M + m) * 2 * D + d] = w * gre;
                    gs[(static_cast<std::int64_t>(k) * M + m) * 2 * D + D + d] = w * gim;
                }
        }
        t.accum(spec, std::move(gs));
    });
}

// ---------------------------------------------------------------- composed

Var mse(Tape& t, Var a, Var b) {
    require_same_shape(t.val(a), t.val(b), "mse");
    Var d = t.sub(a, b);
    return t.mean_all(t.mul(d, d));
}

Var sqsum(Tape& t, Var a) { return t.sum_all(t.mul(a, a)); }

}  // namespace tric::core
