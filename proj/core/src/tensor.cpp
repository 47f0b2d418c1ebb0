#include "oncf/tensor.hpp"

#include <algorithm>
#include <string>

namespace oncf {

namespace {

std::size_t checkedSize(const std::vector<std::size_t>& shape) {
    if (shape.empty() || shape.size() > 4) {
        throw DimensionError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
    }
    std::size_t n = 1;
    for (std::size_t extent : shape) {
        if (extent == 0) {
            throw DimensionError("tensor extents must be positive");
        }
        n *= extent;
    }
    return n;
}

[[noreturn]] void badIndex(const char* what) {
    throw IndexError(std::string("tensor index out of range: ") + what);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checkedSize(shape_), 0.0) {}

Tensor Tensor::fromData(std::vector<double> data, std::vector<std::size_t> shape) {
    const std::size_t n = checkedSize(shape);
    if (n != data.size()) {
        throw DimensionError("fromData: " + std::to_string(data.size()) +
                             " values for a shape of size " + std::to_string(n));
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
        badIndex("axis");
    }
    return shape_[axis];
}

std::size_t Tensor::offset1(std::size_t i) const {
    if (rank() != 1) {
        throw DimensionError("1-index access on rank-" + std::to_string(rank()) + " tensor");
    }
    if (i >= shape_[0]) {
        badIndex("rank-1");
    }
    return i;
}

std::size_t Tensor::offset2(std::size_t i, std::size_t j) const {
    if (rank() != 2) {
        throw DimensionError("2-index access on rank-" + std::to_string(rank()) + " tensor");
    }
    if (i >= shape_[0] || j >= shape_[1]) {
        badIndex("rank-2");
    }
    return i * shape_[1] + j;
}

std::size_t Tensor::offset3(std::size_t i, std::size_t j, std::size_t k) const {
    if (rank() != 3) {
        throw DimensionError("3-index access on rank-" + std::to_string(rank()) + " tensor");
    }
    if (i >= shape_[0] || j >= shape_[1] || k >= shape_[2]) {
        badIndex("rank-3");
    }
    return (i * shape_[1] + j) * shape_[2] + k;
}

std::size_t Tensor::offset4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    if (rank() != 4) {
        throw DimensionError("4-index access on rank-" + std::to_string(rank()) + " tensor");
    }
    if (i >= shape_[0] || j >= shape_[1] || k >= shape_[2] || l >= shape_[3]) {
        badIndex("rank-4");
    }
    return ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
}

std::span<const double> Tensor::row(std::size_t i) const {
    if (rank() != 2) {
        throw DimensionError("row access requires a rank-2 tensor");
    }
    if (i >= shape_[0]) {
        badIndex("row");
    }
    return std::span<const double>(data_).subspan(i * shape_[1], shape_[1]);
}

std::span<double> Tensor::row(std::size_t i) {
    if (rank() != 2) {
        throw DimensionError("row access requires a rank-2 tensor");
    }
    if (i >= shape_[0]) {
        badIndex("row");
    }
    return std::span<double>(data_).subspan(i * shape_[1], shape_[1]);
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    const std::size_t n = checkedSize(shape);
    if (n != size()) {
        throw DimensionError("reshape changes element count");
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
}

Tensor Tensor::flattened() const { return reshaped({size()}); }

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor matvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1 || m.extent(1) != v.extent(0)) {
        throw DimensionError("matvec: need (r x c) matrix and c-vector");
    }
    const std::size_t rows = m.extent(0);
    const std::size_t cols = m.extent(1);
    Tensor out({rows});
    std::span<const double> md = m.data();
    std::span<const double> vd = v.data();
    std::span<double> od = out.data();
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            acc += md[i * cols + j] * vd[j];
        }
        od[i] = acc;
    }
    return out;
}

Tensor ewise(const Tensor& a, const Tensor& b, EwiseOp op) {
    if (!a.sameShape(b)) {
        throw DimensionError("ewise: operand shapes differ");
    }
    Tensor out = a;
    std::span<double> od = out.data();
    std::span<const double> bd = b.data();
    if (op == EwiseOp::Add) {
        for (std::size_t i = 0; i < od.size(); ++i) {
            od[i] += bd[i];
        }
    } else {
        for (std::size_t i = 0; i < od.size(); ++i) {
            od[i] *= bd[i];
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void axpy(std::span<double> y, double alpha, std::span<const double> x) {
    if (y.size() != x.size()) {
        throw DimensionError("axpy: length mismatch");
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += alpha * x[i];
    }
}

double squaredNorm(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) {
        acc += v * v;
    }
    return acc;
}

}  // namespace oncf
