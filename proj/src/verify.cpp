#include "cvc/verify.hpp"

#include <random>

#include "cvc/cells.hpp"
#include "cvc/models.hpp"
#include "cvc/optim.hpp"

namespace cvc {

namespace {

std::vector<Tensor> random_frames(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Tensor> frames;
    frames.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        Tensor f({dim});
        for (std::size_t i = 0; i < dim; ++i) f[i] = gauss(rng);
        frames.push_back(std::move(f));
    }
    return frames;
}

double check_linear(std::uint64_t seed, bool inject_error) {
    std::mt19937_64 rng(seed);
    ParameterStore store;
    store.create_uniform("classifier/W", {kNumLabels, 7}, 7, rng);
    store.create_uniform("classifier/b", {kNumLabels}, 7, rng);
    std::vector<LabeledFeature> samples;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> label(0, kNumLabels - 1);
    for (int i = 0; i < 3; ++i) {
        LabeledFeature s;
        s.feature = Tensor({7});
        for (std::size_t j = 0; j < 7; ++j) s.feature[j] = gauss(rng);
        s.label = label(rng);
        samples.push_back(std::move(s));
    }
    auto loss = [&] {
        double v = accumulate_classifier_gradients(store, samples);
        if (inject_error) store.grad("classifier/b")[0] += 1.0;
        return v;
    };
    return grad_check(loss, store, 1e-5, 0, seed).max_rel_error;
}

double check_softmax_ce(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ParameterStore store;
    store.create_uniform("logits", {9}, 1, rng);
    auto loss = [&] {
        Tape tape;
        TapeBinding binding(tape, store);
        Var l = softmax_cross_entropy(binding["logits"], 4);
        double v = tape.value(l)[0];
        tape.backward(l);
        binding.flush_gradients(store);
        return v;
    };
    return grad_check(loss, store, 1e-5, 0, seed).max_rel_error;
}

double check_cell(CellKind kind, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ParameterStore store;
    create_cell_params(store, "cell", kind, 5, 4, rng);
    auto frames = random_frames(6, 5, rng);
    auto loss = [&] {
        Tape tape;
        TapeBinding binding(tape, store);
        CellVars cell = bind_cell(binding, "cell", kind, 4);
        std::vector<Var> inputs;
        for (const auto& f : frames) inputs.push_back(tape.leaf(f));
        auto states = unroll(cell, inputs, cell_zero_state(tape, kind, 4));
        Var total = tape.leaf(Tensor::scalar(0.0));
        for (const auto& s : states) total = add(total, sum(s.h));
        double v = tape.value(total)[0];
        tape.backward(total);
        binding.flush_gradients(store);
        return v;
    };
    return grad_check(loss, store, 1e-5, 0, seed).max_rel_error;
}

double check_s2vt(CellKind kind, std::uint64_t seed, std::size_t sample_coords) {
    S2VTConfig config;
    config.feature_dim = 6;
    config.hidden_dim = 5;
    config.embed_dim = 4;
    config.cell_kind = kind;
    config.max_caption_len = 8;
    config.seed = seed;
    S2VTModel model(config, Vocabulary());

    std::mt19937_64 rng(seed + 1);
    std::vector<CaptionSample> samples;
    auto labels = all_labels();
    for (int i = 0; i < 2; ++i) {
        CaptionSample s;
        s.frames = random_frames(4, 6, rng);
        s.caption = labels[(seed + static_cast<std::size_t>(i)) % labels.size()];
        samples.push_back(std::move(s));
    }
    auto loss = [&] { return accumulate_caption_gradients(model, samples); };
    return grad_check(loss, model.params(), 1e-5, sample_coords, seed).max_rel_error;
}

} // namespace

GradCheckSummary run_gradient_checks(std::uint64_t seed, std::size_t s2vt_sample_coords,
                                     bool inject_error) {
    GradCheckSummary summary;
    auto record = [&](const std::string& name, double err) {
        summary.component_errors.emplace_back(name, err);
        summary.max_rel_error = std::max(summary.max_rel_error, err);
    };
    record("linear", check_linear(seed, inject_error));
    record("softmax_ce", check_softmax_ce(seed));
    record("lstm", check_cell(CellKind::Lstm, seed));
    record("gru", check_cell(CellKind::Gru, seed));
    record("s2vt_lstm", check_s2vt(CellKind::Lstm, seed, s2vt_sample_coords));
    record("s2vt_gru", check_s2vt(CellKind::Gru, seed, s2vt_sample_coords));
    return summary;
}

} // namespace cvc
