// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#include "tric/params.hpp"

#include <cmath>
#include <stdexcept>

namespace tric::core {

int ParamStore::add(const std::string& name, Tensor init, bool trainable) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    Param p;
    p.name = name;
    p.grad = Tensor(init.shape());
    p.value = std::move(init);
    p.trainable = trainable;
    items_.push_back(std::move(p));
    const int h = static_cast<int>(items_.size()) - 1;
    index_[name] = h;
    return h;
}

int ParamStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

Param& ParamStore::at(const std::string& name) {
    const int h = find(name);
    if (h < 0) throw std::out_of_range("no such parameter: " + name);
    return items_[static_cast<std::size_t>(h)];
}

std::int64_t ParamStore::total_size() const {
    std::int64_t n = 0;
    for (const auto& p : items_) n += p.value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& p : items_)
        for (std::int64_t i = 0; i < p.grad.size(); ++i) p.grad[i] = 0.0;
}

Var Binder::operator()(int handle) {
    auto it = bound_.find(handle);
    if (it != bound_.end()) return it->second;
    Param& p = store_.at(handle);
    Var v = tape_.leaf(p.value, p.trainable);
    bound_[handle] = v;
    order_.push_back(handle);
    return v;
}

Var Binder::operator()(const std::string& name) {
    const int h = store_.find(name);
    if (h < 0) throw std::out_of_range("no such parameter: " + name);
    return (*this)(h);
}

void Binder::accumulate_grads(double scale) {
    for (int h : order_) {
        Param& p = store_.at(h);
        if (!p.trainable) continue;
        const Tensor& g = tape_.grad(bound_.at(h));
        for (std::int64_t i = 0; i < g.size(); ++i) p.grad[i] += scale * g[i];
    }
}

Tensor kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    rng.fill_uniform(t, -bound, bound);
    return t;
}

}  // namespace tric::core
