// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "tric/rng.hpp"
#include "tric/tape.hpp"
#include "tric/tensor.hpp"

namespace tric::core {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    // AdamW moments, lazily sized by the optimizer.
    Tensor m, v;
    bool trainable{true};
};

/// Named parameter set. Creation order is fixed by construction and is the
/// canonical order for checkpoints and optimizer sweeps.
class ParamStore {
public:
    int add(const std::string& name, Tensor init, bool trainable = true);
    int find(const std::string& name) const;  // -1 when absent
    bool has(const std::string& name) const { return find(name) >= 0; }

    Param& at(int h) { return items_[static_cast<std::size_t>(h)]; }
    const Param& at(int h) const { return items_[static_cast<std::size_t>(h)]; }
    Param& at(const std::string& name);

    int count() const { return static_cast<int>(items_.size()); }
    std::int64_t total_size() const;

    void zero_grads();

    std::vector<Param>& items() { return items_; }
    const std::vector<Param>& items() const { return items_; }

private:
    std::vector<Param> items_;
    std::unordered_map<std::string, int> index_;
};

/// Binds store parameters onto a tape as leaves and routes gradients back.
/// Binding the same handle twice returns the same Var.
class Binder {
public:
    Binder(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

    Var operator()(int handle);
    Var operator()(const std::string& name);

    /// Adds tape gradients into store grads, scaled; fixed handle order.
    void accumulate_grads(double scale = 1.0);

private:
    Tape& tape_;
    ParamStore& store_;
    std::unordered_map<int, Var> bound_;
    std::vector<int> order_;
};

// Seeded initializers.
Tensor kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng);

}  // namespace tric::core
