#include "cvc/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cvc/checkpoint.hpp"
#include "cvc/errors.hpp"

namespace cvc {

// --- classifier ------------------------------------------------------------

void ClassifierConfig::validate() const {
    if (input_dim == 0) throw InvalidConfig("classifier input_dim must be positive");
    if (num_classes != kNumLabels) {
        throw InvalidConfig("classifier num_classes must equal the 8-label grammar");
    }
    schedule.validate();
}

void init_classifier(ParameterStore& store, const ClassifierConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    store.rng_seed = config.seed;
    store.create_uniform("classifier/W", {config.num_classes, config.input_dim},
                         config.input_dim, rng);
    store.create("classifier/b", {config.num_classes});
}

ClassifyResult classify(const ParameterStore& store, const Tensor& feature) {
    const Tensor& w = store.value("classifier/W");
    const Tensor& b = store.value("classifier/b");
    if (feature.rank() != 1 || feature.size() != w.cols()) {
        throw ShapeMismatch("feature length does not match classifier input_dim");
    }
    Tensor logits({w.rows()});
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < w.cols(); ++j) acc += w.at(i, j) * feature[j];
        logits[i] = acc;
    }
    ClassifyResult result;
    result.probabilities = softmax(logits);
    result.class_id = argmax(result.probabilities);
    return result;
}

double accumulate_classifier_gradients(ParameterStore& store,
                                       const std::vector<LabeledFeature>& samples) {
    if (samples.empty()) throw EmptyDataset("classifier gradient pass over an empty dataset");
    Tape tape;
    TapeBinding binding(tape, store);
    Var w = binding["classifier/W"];
    Var b = binding["classifier/b"];
    Var total = tape.leaf(Tensor::scalar(0.0));
    for (const auto& sample : samples) {
        if (sample.label >= kNumLabels) throw InvalidConfig("label out of range");
        Var x = tape.leaf(sample.feature);
        Var logits = add(matvec(w, x), b);
        total = add(total, softmax_cross_entropy(logits, sample.label));
    }
    Var mean = affine(total, 1.0 / static_cast<double>(samples.size()), 0.0);
    double loss = tape.value(mean)[0];
    tape.backward(mean);
    binding.flush_gradients(store);
    return loss;
}

namespace {

double classifier_accuracy(const ParameterStore& store,
                           const std::vector<LabeledFeature>& samples) {
    if (samples.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& s : samples) {
        if (classify(store, s.feature).class_id == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

} // namespace

std::vector<EpochStats> train_classifier(ParameterStore& store,
                                         const std::vector<LabeledFeature>& train,
                                         const std::vector<LabeledFeature>& val,
                                         const ClassifierConfig& config) {
    config.validate();
    if (train.empty()) throw EmptyDataset("train_classifier needs a nonempty training set");
    std::vector<EpochStats> trace;
    trace.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = config.schedule.lr(epoch);
        stats.train_accuracy = classifier_accuracy(store, train);
        stats.val_accuracy = classifier_accuracy(store, val);
        stats.loss = accumulate_classifier_gradients(store, train);
        if (!std::isfinite(stats.loss)) throw NonFiniteLoss("classifier loss diverged");
        sgd_step(store, config.schedule, epoch, config.clip_norm);
        trace.push_back(stats);
    }
    return trace;
}

// --- S2VT captioner ----------------------------------------------------------

void S2VTConfig::validate() const {
    if (feature_dim == 0 || hidden_dim == 0 || embed_dim == 0) {
        throw InvalidConfig("captioner dimensions must be positive");
    }
    if (max_caption_len == 0) throw InvalidConfig("max_caption_len must be positive");
    schedule.validate();
}

S2VTModel::S2VTModel(S2VTConfig config, Vocabulary vocab)
    : S2VTModel(std::move(config), std::move(vocab), true) {}

S2VTModel::S2VTModel(S2VTConfig config, Vocabulary vocab, bool init)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
    config_.validate();
    if (!init) return;
    std::mt19937_64 rng(config_.seed);
    store_.rng_seed = config_.seed;
    store_.create_uniform("embed", {vocab_.size(), config_.embed_dim}, config_.embed_dim, rng);
    create_cell_params(store_, "layer1", config_.cell_kind, config_.feature_dim,
                       config_.hidden_dim, rng);
    create_cell_params(store_, "layer2", config_.cell_kind,
                       config_.hidden_dim + config_.embed_dim, config_.hidden_dim, rng);
    store_.create_uniform("proj/W", {vocab_.size(), config_.hidden_dim}, config_.hidden_dim, rng);
    store_.create("proj/b", {vocab_.size()});
}

namespace {

struct UnrolledStack {
    CellVars layer1, layer2;
    CellState state1, state2;
    Var pad_embed;
};

UnrolledStack begin_stack(Tape& tape, const TapeBinding& binding, const S2VTConfig& config) {
    UnrolledStack s;
    s.layer1 = bind_cell(binding, "layer1", config.cell_kind, config.hidden_dim);
    s.layer2 = bind_cell(binding, "layer2", config.cell_kind, config.hidden_dim);
    s.state1 = cell_zero_state(tape, config.cell_kind, config.hidden_dim);
    s.state2 = cell_zero_state(tape, config.cell_kind, config.hidden_dim);
    s.pad_embed = embedding_lookup(binding["embed"], Vocabulary::kPadId);
    return s;
}

// One step of the two-layer stack: layer 1 on the frame (or zero) input,
// layer 2 on [h1 ; word embedding].
Var stack_step(UnrolledStack& s, Var layer1_input, Var word_embed) {
    s.state1 = cell_step(s.layer1, layer1_input, s.state1);
    s.state2 = cell_step(s.layer2, concat(s.state1.h, word_embed), s.state2);
    return s.state2.h;
}

void check_frames(std::span<const Tensor> frames, std::size_t feature_dim) {
    if (frames.empty()) throw EmptyFeatureSequence("captioner input has no frames");
    for (const auto& f : frames) {
        if (f.rank() != 1 || f.size() != feature_dim) {
            throw ShapeMismatch("frame dimension does not match feature_dim");
        }
    }
}

} // namespace

Var S2VTModel::build_loss(Tape& tape, const TapeBinding& binding, std::span<const Tensor> frames,
                          const std::vector<std::size_t>& target_ids) const {
    check_frames(frames, config_.feature_dim);
    if (target_ids.size() < 2 || target_ids.front() != Vocabulary::kBosId) {
        throw ShapeMismatch("target must be an encoded caption starting with BOS");
    }
    auto eos = std::find(target_ids.begin(), target_ids.end(), Vocabulary::kEosId);
    if (eos == target_ids.end()) throw ShapeMismatch("target has no EOS");
    std::size_t decode_steps = static_cast<std::size_t>(eos - target_ids.begin());
    for (std::size_t id : target_ids) {
        if (id >= vocab_.size()) throw ShapeMismatch("target id out of vocabulary range");
    }

    UnrolledStack stack = begin_stack(tape, binding, config_);
    Var proj_w = binding["proj/W"];
    Var proj_b = binding["proj/b"];
    Var embed = binding["embed"];

    // encoding stage: frames into layer 1, PAD embeddings into layer 2
    for (const auto& frame : frames) {
        stack_step(stack, tape.leaf(frame), stack.pad_embed);
    }

    // decoding stage: zero frame input, teacher-forced words; predict
    // target_ids[i+1] from input target_ids[i], through EOS
    Var zero_frame = tape.leaf(Tensor({config_.feature_dim}));
    Var total = tape.leaf(Tensor::scalar(0.0));
    for (std::size_t i = 0; i < decode_steps; ++i) {
        Var word = embedding_lookup(embed, target_ids[i]);
        Var h2 = stack_step(stack, zero_frame, word);
        Var logits = add(matvec(proj_w, h2), proj_b);
        total = add(total, softmax_cross_entropy(logits, target_ids[i + 1]));
    }
    return total;
}

double S2VTModel::forward_loss(std::span<const Tensor> frames,
                               const std::vector<std::size_t>& target_ids) const {
    Tape tape;
    TapeBinding binding(tape, store_);
    Var loss = build_loss(tape, binding, frames, target_ids);
    return tape.value(loss)[0];
}

Caption S2VTModel::decode(std::span<const Tensor> frames) const {
    check_frames(frames, config_.feature_dim);
    Tape tape;
    TapeBinding binding(tape, store_);
    UnrolledStack stack = begin_stack(tape, binding, config_);
    Var proj_w = binding["proj/W"];
    Var proj_b = binding["proj/b"];
    Var embed = binding["embed"];

    for (const auto& frame : frames) {
        stack_step(stack, tape.leaf(frame), stack.pad_embed);
    }

    Var zero_frame = tape.leaf(Tensor({config_.feature_dim}));
    Caption out;
    std::size_t word = Vocabulary::kBosId;
    for (std::size_t step = 0; step < config_.max_caption_len + 1; ++step) {
        Var h2 = stack_step(stack, zero_frame, embedding_lookup(embed, word));
        Var logits = add(matvec(proj_w, h2), proj_b);
        const Tensor& scores = tape.value(logits);
        // BOS and PAD are inputs, never emissions; EOS terminates
        std::size_t best = Vocabulary::kEosId;
        for (std::size_t id = 0; id < scores.size(); ++id) {
            if (id == Vocabulary::kBosId || id == Vocabulary::kPadId) continue;
            if (scores[id] > scores[best]) best = id;
        }
        if (best == Vocabulary::kEosId) break;
        out.tokens.push_back(vocab_.token_of(best));
        if (out.tokens.size() >= config_.max_caption_len) break;
        word = best;
    }
    return out;
}

double accumulate_caption_gradients(S2VTModel& model, const std::vector<CaptionSample>& samples) {
    if (samples.empty()) throw EmptyDataset("captioner gradient pass over an empty dataset");
    Tape tape;
    TapeBinding binding(tape, model.params());
    Var total = tape.leaf(Tensor::scalar(0.0));
    for (const auto& sample : samples) {
        auto target = encode_tokens(sample.caption, model.vocab(), model.config().max_caption_len);
        total = add(total, model.build_loss(tape, binding, sample.frames, target));
    }
    Var mean = affine(total, 1.0 / static_cast<double>(samples.size()), 0.0);
    double loss = tape.value(mean)[0];
    tape.backward(mean);
    binding.flush_gradients(model.params());
    return loss;
}

std::vector<EpochStats> train_captioner(S2VTModel& model, const std::vector<CaptionSample>& train,
                                        const std::vector<CaptionSample>& val) {
    const S2VTConfig& config = model.config();
    if (train.empty()) throw EmptyDataset("train_captioner needs a nonempty training set");

    auto split_accuracy = [&](const std::vector<CaptionSample>& samples) {
        if (samples.empty()) return 0.0;
        std::size_t correct = 0;
        for (const auto& s : samples) {
            if (model.decode(s.frames) == s.caption) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(samples.size());
    };

    std::vector<EpochStats> trace;
    trace.reserve(config.max_epochs);
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = config.schedule.lr(epoch);
        stats.train_accuracy = split_accuracy(train);
        stats.val_accuracy = split_accuracy(val);
        if (stats.train_accuracy >= config.early_stop_accuracy) {
            double total = 0.0;
            for (const auto& s : train) {
                auto target = encode_tokens(s.caption, model.vocab(),
                                            model.config().max_caption_len);
                total += model.forward_loss(s.frames, target);
            }
            stats.loss = total / static_cast<double>(train.size());
            trace.push_back(stats);
            break;
        }
        stats.loss = accumulate_caption_gradients(model, train);
        if (!std::isfinite(stats.loss)) throw NonFiniteLoss("captioner loss diverged");
        sgd_step(model.params(), config.schedule, epoch, config.clip_norm);
        trace.push_back(stats);
    }
    return trace;
}

void S2VTModel::save(const std::filesystem::path& path) const {
    CheckpointHeader header;
    header["kind"] = "captioner";
    header["cell"] = to_string(config_.cell_kind);
    header["feature_dim"] = std::to_string(config_.feature_dim);
    header["hidden_dim"] = std::to_string(config_.hidden_dim);
    header["embed_dim"] = std::to_string(config_.embed_dim);
    header["max_caption_len"] = std::to_string(config_.max_caption_len);
    std::ostringstream hash;
    hash << std::hex << vocab_.hash();
    header["vocab_hash"] = hash.str();
    save_checkpoint(path, store_, header);
}

S2VTModel S2VTModel::load(const std::filesystem::path& path, const Vocabulary& vocab) {
    ParameterStore store;
    CheckpointHeader header = load_checkpoint(path, store);
    auto field = [&](const std::string& key) -> std::string {
        auto it = header.find(key);
        if (it == header.end()) {
            throw IncompatibleCheckpoint("checkpoint missing header field: " + key);
        }
        return it->second;
    };
    if (field("kind") != "captioner") {
        throw IncompatibleCheckpoint("checkpoint is not a captioner model");
    }
    std::ostringstream hash;
    hash << std::hex << vocab.hash();
    if (field("vocab_hash") != hash.str()) {
        throw IncompatibleCheckpoint("checkpoint was trained with a different vocabulary");
    }
    S2VTConfig config;
    config.cell_kind = cell_kind_from_string(field("cell"));
    config.feature_dim = std::stoull(field("feature_dim"));
    config.hidden_dim = std::stoull(field("hidden_dim"));
    config.embed_dim = std::stoull(field("embed_dim"));
    config.max_caption_len = std::stoull(field("max_caption_len"));
    S2VTModel model(std::move(config), vocab, false);
    model.store_ = std::move(store);
    return model;
}

double sentence_accuracy(const std::vector<Caption>& predictions,
                         const std::vector<Caption>& references) {
    if (predictions.size() != references.size()) {
        throw LengthMismatch("prediction and reference lists differ in length");
    }
    if (predictions.empty()) throw LengthMismatch("sentence_accuracy over empty lists");
    std::size_t exact = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == references[i]) ++exact;
    }
    return static_cast<double>(exact) / static_cast<double>(predictions.size());
}

} // namespace cvc
