#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cvc/autodiff.hpp"
#include "cvc/tensor.hpp"

namespace cvc {

// All trainable weights, each paired with a same-shaped gradient
// accumulator. std::map keeps iteration order deterministic, which the
// checkpoint format and gradient clipping rely on.
class ParameterStore {
public:
    Tensor& create(const std::string& name, std::vector<std::size_t> shape);
    Tensor& create_uniform(const std::string& name, std::vector<std::size_t> shape,
                           std::size_t fan_in, std::mt19937_64& rng);

    bool has(const std::string& name) const;
    Tensor& value(const std::string& name);
    const Tensor& value(const std::string& name) const;
    Tensor& grad(const std::string& name);
    const Tensor& grad(const std::string& name) const;

    std::vector<std::string> names() const;
    std::size_t total_size() const;

    void zero_grads();
    double grad_global_norm() const;
    void scale_grads(double factor);

    std::uint64_t rng_seed = 0;

private:
    struct Entry {
        Tensor value;
        Tensor grad;
    };
    Entry& entry(const std::string& name);
    const Entry& entry(const std::string& name) const;
    std::map<std::string, Entry> entries_;
};

// lr(epoch) = base_lr * factor^floor(epoch / period)
struct StepDecaySchedule {
    double base_lr = 1e-4;
    double factor = 0.5;
    std::size_t period = 10;

    double lr(std::size_t epoch) const;
    void validate() const; // throws InvalidConfig
};

// Vanilla SGD: w -= lr(epoch) * grad for every parameter, then zero the
// gradients. clip_norm > 0 applies a global-norm clip first.
void sgd_step(ParameterStore& store, const StepDecaySchedule& schedule, std::size_t epoch,
              double clip_norm = 5.0);

// Binds every parameter of a store to a leaf on the given tape so a model
// can be expressed once in tape ops. flush_gradients() moves the tape's
// leaf gradients back into the store accumulators; binding a const store
// keeps pure inference paths const.
class TapeBinding {
public:
    TapeBinding(Tape& tape, const ParameterStore& store);
    Var operator[](const std::string& name) const;
    void flush_gradients(ParameterStore& store);

private:
    Tape& tape_;
    std::map<std::string, Var> vars_;
};

// Finite-difference gradient verification. The callback must compute the
// loss from the store's current values and accumulate analytic gradients
// into the store (forward + backward + flush). Central differences
// (f(x+h) - f(x-h)) / 2h are compared per coordinate; for parameters
// larger than sample_per_param a seeded random subset is checked.
struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t coords_checked = 0;
    std::map<std::string, double> per_param; // max rel error per parameter
};

GradCheckReport grad_check(const std::function<double()>& loss_and_grad, ParameterStore& store,
                           double step = 1e-5, std::size_t sample_per_param = 0,
                           std::uint64_t seed = 0);

} // namespace cvc
