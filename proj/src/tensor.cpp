#include "cvc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvc/errors.hpp"

namespace cvc {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_product(shape_)) {
        throw ShapeMismatch("tensor value count does not match shape");
    }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::from_vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeMismatch("rows() requires a rank-2 tensor");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeMismatch("cols() requires a rank-2 tensor");
    return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor softmax(const Tensor& logits) {
    if (logits.size() == 0) throw EmptyInput("softmax of an empty vector");
    const auto& x = logits.values();
    double m = *std::max_element(x.begin(), x.end());
    std::vector<double> e(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        e[i] = std::exp(x[i] - m);
        sum += e[i];
    }
    for (double& v : e) v /= sum;
    return Tensor(logits.shape(), std::move(e));
}

double cross_entropy(const Tensor& predicted, const Tensor& target_one_hot) {
    if (!predicted.same_shape(target_one_hot)) {
        throw ShapeMismatch("cross_entropy operands differ in shape");
    }
    std::size_t hot = predicted.size();
    for (std::size_t i = 0; i < target_one_hot.size(); ++i) {
        double t = target_one_hot[i];
        if (t == 1.0 && hot == predicted.size()) {
            hot = i;
        } else if (t != 0.0) {
            throw ShapeMismatch("cross_entropy target is not one-hot");
        }
    }
    if (hot == predicted.size()) throw ShapeMismatch("cross_entropy target is not one-hot");
    double p = predicted[hot];
    if (p >= 1.0) return 0.0;
    return -std::log(p);
}

std::size_t argmax(const Tensor& v) {
    if (v.size() == 0) throw EmptyInput("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

} // namespace cvc
