#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cvc {

// Finite-difference verification over every differentiable component:
// the linear classifier head, the fused softmax + cross-entropy node, an
// LSTM unroll, a GRU unroll, and the end-to-end captioner loss (sampled
// coordinates). One entry per component, worst relative error inside.
struct GradCheckSummary {
    std::vector<std::pair<std::string, double>> component_errors;
    double max_rel_error = 0.0;

    bool passes(double tolerance) const { return max_rel_error < tolerance; }
};

// inject_error corrupts one analytic gradient on purpose so the harness
// itself can be tested end to end.
GradCheckSummary run_gradient_checks(std::uint64_t seed, std::size_t s2vt_sample_coords = 100,
                                     bool inject_error = false);

} // namespace cvc
