// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#include "tric/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tric::core {

namespace {
std::int64_t checked_size(const std::vector<int>& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor shape must be non-empty");
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor extents must be positive, got " + Tensor::shape_str(shape));
        n *= d;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(checked_size(shape_)), 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = value;
    return t;
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data) {
    std::int64_t n = checked_size(shape);
    if (n != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

double& Tensor::at(std::initializer_list<int> idx) {
    const auto st = strides();
    if (idx.size() != shape_.size()) throw std::invalid_argument("index rank mismatch");
    std::int64_t off = 0;
    std::size_t k = 0;
    for (int i : idx) {
        if (i < 0 || i >= shape_[k]) throw std::out_of_range("tensor index out of range");
        off += i * st[k++];
    }
    return data_[static_cast<std::size_t>(off)];
}

double Tensor::at(std::initializer_list<int> idx) const {
    return const_cast<Tensor*>(this)->at(idx);
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

std::vector<std::int64_t> Tensor::strides() const {
    std::vector<std::int64_t> st(shape_.size(), 1);
    for (int i = static_cast<int>(shape_.size()) - 2; i >= 0; --i)
        st[static_cast<std::size_t>(i)] = st[static_cast<std::size_t>(i) + 1] * shape_[static_cast<std::size_t>(i) + 1];
    return st;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace tric::core
