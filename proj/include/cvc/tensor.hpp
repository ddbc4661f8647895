#pragma once

#include <cstddef>
#include <vector>

namespace cvc {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything this
// project needs; higher ranks are storable but no op consumes them.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor from_vector(std::vector<double> v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    // rank-2 accessors
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(double v);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// softmax over a rank-1 tensor, computed with max-subtraction so large
// logits cannot overflow. Throws EmptyInput on an empty vector.
Tensor softmax(const Tensor& logits);

// Categorical cross-entropy -sum_j Z_j log Zhat_j for a one-hot target.
// Throws ShapeMismatch when lengths differ or the target is not one-hot.
double cross_entropy(const Tensor& predicted, const Tensor& target_one_hot);

// argmax with lowest-index tie-breaking.
std::size_t argmax(const Tensor& v);

} // namespace cvc
