#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oncf/error.hpp"

namespace oncf {

/// Dense row-major tensor of rank 1..4 backed by 64-bit floats.
///
/// All training arithmetic is done in doubles; checkpoints serialize the same
/// row-major layout as 32-bit floats (see checkpoint.hpp). Element access is
/// bounds-checked and throws IndexError; kernels that need raw speed work on
/// data() spans after validating shapes once.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled tensor. Extents must be positive, rank 1..4.
    explicit Tensor(std::vector<std::size_t> shape);

    static Tensor fromData(std::vector<double> data, std::vector<std::size_t> shape);

    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t extent(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool sameShape(const Tensor& other) const { return shape_ == other.shape_; }

    double operator()(std::size_t i) const { return data_[offset1(i)]; }
    double& operator()(std::size_t i) { return data_[offset1(i)]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[offset2(i, j)]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[offset2(i, j)]; }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[offset3(i, j, k)];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[offset3(i, j, k)];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[offset4(i, j, k, l)];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[offset4(i, j, k, l)];
    }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    // Contiguous row of a 2D tensor.
    std::span<const double> row(std::size_t i) const;
    std::span<double> row(std::size_t i);

    // Same data, different shape; sizes must agree.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    // Row-major 1D copy.
    Tensor flattened() const;

    void fill(double value);
    void setZero() { fill(0.0); }

private:
    std::size_t offset1(std::size_t i) const;
    std::size_t offset2(std::size_t i, std::size_t j) const;
    std::size_t offset3(std::size_t i, std::size_t j, std::size_t k) const;
    std::size_t offset4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

enum class EwiseOp { Add, Mul };

// Standard matrix-vector product; shapes must satisfy m.shape[1] == v.shape[0].
Tensor matvec(const Tensor& m, const Tensor& v);

// Element-wise combination of identically shaped tensors.
Tensor ewise(const Tensor& a, const Tensor& b, EwiseOp op);

// Small span helpers shared by the nn kernels and the optimizer.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(std::span<double> y, double alpha, std::span<const double> x);  // y += alpha * x
double squaredNorm(std::span<const double> a);

}  // namespace oncf
