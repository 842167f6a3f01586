// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "tric/tensor.hpp"

namespace tric::core {

/// Handle to a node on a Tape.
struct Var {
    int id{-1};
    bool valid() const { return id >= 0; }
};

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order,
/// which is a topological order by construction; backward() walks the
/// node list once in reverse. A tape is consumable: one backward per
/// forward.
///
/// Shapes follow row-major conventions throughout. Broadcasting aligns
/// trailing axes (numpy rules).
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = false);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    const Tensor& val(Var v) const;
    bool requires_grad(Var v) const;
    /// Gradient accumulated by backward(); zeros if the node was never touched.
    const Tensor& grad(Var v) const;

    /// Seeds d(loss)/d(loss)=1 and propagates. loss must be scalar (size 1).
    void backward(Var loss);
    bool consumed() const { return consumed_; }

    std::size_t node_count() const { return nodes_.size(); }

    // ---- arithmetic ----
    Var add(Var a, Var b);   // broadcasting
    Var mul(Var a, Var b);   // broadcasting
    Var sub(Var a, Var b);
    Var neg(Var a);
    Var scale(Var a, double c);

    // ---- linear algebra ----
    /// a: [..., n, k] (rank >= 2) times b: [k, m] -> [..., n, m].
    Var matmul(Var a, Var b);
    /// Batched: a: [B..., n, k], b: [B..., k, m], equal leading dims.
    Var bmm(Var a, Var b);
    /// a: [n, k] applied from the left over axis -2 of x: [..., k, m] -> [..., n, m].
    Var lmatmul(Var a, Var x);

    // ---- shape ----
    Var transpose(Var a, std::vector<int> perm);
    Var reshape(Var a, std::vector<int> shape);
    Var expand(Var a, std::vector<int> shape);  // broadcast materialise
    Var concat(const std::vector<Var>& parts, int axis);
    Var slice(Var a, int axis, int start, int len);

    // ---- nonlinearities ----
    Var relu(Var a);
    Var gelu(Var a);  // exact erf form
    Var sigmoid(Var a);
    Var softmax_last(Var a);

    // ---- normalisation ----
    Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
    /// Channels = last axis; statistics per group over all positions.
    Var group_norm(Var x, Var gamma, Var beta, int groups, double eps = 1e-5);

    // ---- convolution ----
    /// x: [L, Cin], w: [K, Cin, Cout], b: [Cout]; same zero padding, odd K.
    Var conv1d(Var x, Var w, Var b);
    /// x: [T, M, D], w: [K, D], b: [D]; axis 0 = frames, 1 = joints.
    Var depthwise_conv(Var x, Var w, Var b, int axis);

    // ---- reductions / pooling ----
    Var mean_axis(Var a, int axis);
    Var sum_all(Var a);   // -> scalar
    Var mean_all(Var a);  // -> scalar
    Var mean_positions(Var a);  // [T, M, D] -> [D]
    Var max_positions(Var a);   // [T, M, D] -> [D]
    /// Stride-s average pooling over frames; tail window may be short.
    Var avgpool_frames(Var a, int stride);
    /// Nearest-frame upsampling: out[i] = x[i / stride], trimmed to out_len.
    Var repeat_frames(Var a, int stride, int out_len);

    // ---- frequency transforms (along the frame axis of [L, M, D]) ----
    Var dwt_low(Var a);    // L even -> [L/2, M, D], orthonormal Haar
    Var dwt_high(Var a);   // L even -> [L/2, M, D]
    Var idwt(Var low, Var high);
    /// Real DFT; spectrum packed as [K, M, 2D] with re | im halves, K = L/2+1.
    Var rfft_frames(Var a);
    Var irfft_frames(Var spec, int out_len);

private:
    struct Node {
        Tensor v;
        Tensor g;
        bool rg{false};
        bool grad_set{false};
        std::function<void(Tape&, const Tensor&)> back;
    };
    std::vector<Node> nodes_;
    bool consumed_{false};

    Var make(Tensor v, bool rg, std::function<void(Tape&, const Tensor&)> back);
    void accum(Var v, Tensor g);
    void accum_inplace(Var v, const Tensor& g);
    const Node& node(Var v) const;
    bool any_rg(std::initializer_list<Var> vs) const;
};

// ---- composed helpers ----
Var mse(Tape& t, Var a, Var b);    // mean((a-b)^2)
Var sqsum(Tape& t, Var a);         // sum(a^2)

// ---- shape utilities shared with tests ----
std::vector<int> broadcast_shape(const std::vector<int>& a, const std::vector<int>& b);
Tensor reduce_to_shape(const Tensor& g, const std::vector<int>& target);

}  // namespace tric::core
