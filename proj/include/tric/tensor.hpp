// Copyright (c) 2026, the tric authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace tric::core {

/// Dense row-major tensor of doubles. Shape extents are strictly positive;
/// a rank-0 tensor is not representable, scalars use shape {1}.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);  // zero-filled

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar(double value);
    static Tensor from(std::vector<int> shape, std::vector<double> data);

    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    /// Multi-index access, for tests and small code paths.
    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;

    /// Row-major strides for this shape.
    std::vector<std::int64_t> strides() const;

    static std::string shape_str(const std::vector<int>& shape);
    std::string shape_str() const { return shape_str(shape_); }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

/// Throws std::invalid_argument naming both shapes unless they match.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace tric::core
