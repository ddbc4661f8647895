#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cvc/cells.hpp"
#include "cvc/grammar.hpp"
#include "cvc/optim.hpp"
#include "cvc/tensor.hpp"

namespace cvc {

// One row of a training trace. Loss and accuracies are measured on the
// parameters at the start of the epoch, lr is the rate applied by that
// epoch's update.
struct EpochStats {
    std::size_t epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
};

// --- linear softmax classifier over whole-video features ------------------

struct ClassifierConfig {
    std::size_t input_dim = 4096;
    std::size_t num_classes = kNumLabels; // fixed by the grammar
    StepDecaySchedule schedule{1e-4, 0.5, 10};
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;

    void validate() const;
};

struct LabeledFeature {
    Tensor feature;    // whole-video vector
    std::size_t label; // class id in [0, 8)
};

struct ClassifyResult {
    Tensor probabilities;
    std::size_t class_id; // argmax, lowest id wins ties
};

void init_classifier(ParameterStore& store, const ClassifierConfig& config);
ClassifyResult classify(const ParameterStore& store, const Tensor& feature);

// Full-batch SGD on mean cross-entropy. Deterministic given the seed used
// at init; throws EmptyDataset / NonFiniteLoss.
std::vector<EpochStats> train_classifier(ParameterStore& store,
                                         const std::vector<LabeledFeature>& train,
                                         const std::vector<LabeledFeature>& val,
                                         const ClassifierConfig& config);

// Builds the loss graph for one pass over the samples, runs backward and
// flushes gradients into the store. Returns the mean loss. Shared by the
// training loop and the gradient checker.
double accumulate_classifier_gradients(ParameterStore& store,
                                       const std::vector<LabeledFeature>& samples);

// --- S2VT captioner --------------------------------------------------------

struct S2VTConfig {
    std::size_t feature_dim = 2048;
    std::size_t hidden_dim = 512;
    std::size_t embed_dim = 512;
    CellKind cell_kind = CellKind::Gru;
    std::size_t max_caption_len = 8;
    StepDecaySchedule schedule{4e-5, 0.8, 200};
    std::size_t max_epochs = 2000;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;
    // stop once training sentence accuracy reaches this; > 1 disables
    double early_stop_accuracy = 2.0;

    void validate() const;
};

struct CaptionSample {
    std::vector<Tensor> frames;
    Caption caption;
};

// Two-layer sequence-to-sequence captioner. Layer 1 reads frame features
// (zero input during decoding); layer 2 reads the concatenation of layer
// 1's hidden state and the current word embedding (PAD while encoding,
// BOS then teacher-forced words while decoding); a linear projection of
// layer 2's hidden state scores the vocabulary.
class S2VTModel {
public:
    S2VTModel(S2VTConfig config, Vocabulary vocab);

    const S2VTConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    ParameterStore& params() { return store_; }
    const ParameterStore& params() const { return store_; }

    // Sum over decode steps of -log P(target | prefix, frames); targets in
    // encoded form [BOS, words..., EOS, PAD...]. Gradient-free.
    double forward_loss(std::span<const Tensor> frames,
                        const std::vector<std::size_t>& target_ids) const;

    // Greedy argmax decoding; emissions feed back as the next input. Stops
    // at EOS or after max_caption_len words. Specials never appear in the
    // output.
    Caption decode(std::span<const Tensor> frames) const;

    void save(const std::filesystem::path& path) const;
    // Throws IncompatibleCheckpoint when the file is not a captioner
    // checkpoint or its vocabulary hash differs.
    static S2VTModel load(const std::filesystem::path& path, const Vocabulary& vocab);

    // Internal graph builder, exposed for the training loop and tests.
    Var build_loss(Tape& tape, const TapeBinding& binding, std::span<const Tensor> frames,
                   const std::vector<std::size_t>& target_ids) const;

private:
    S2VTModel(S2VTConfig config, Vocabulary vocab, bool init);
    S2VTConfig config_;
    Vocabulary vocab_;
    ParameterStore store_;
};

// Mean caption loss over the samples with backward + flush, as above.
double accumulate_caption_gradients(S2VTModel& model, const std::vector<CaptionSample>& samples);

// Full-batch SGD on the mean caption loss. Throws EmptyDataset /
// NonFiniteLoss.
std::vector<EpochStats> train_captioner(S2VTModel& model,
                                        const std::vector<CaptionSample>& train,
                                        const std::vector<CaptionSample>& val);

// Fraction of positions where prediction and reference token sequences are
// exactly equal. Throws LengthMismatch.
double sentence_accuracy(const std::vector<Caption>& predictions,
                         const std::vector<Caption>& references);

} // namespace cvc
