#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cvc/checkpoint.hpp"
#include "cvc/data.hpp"
#include "cvc/errors.hpp"
#include "cvc/models.hpp"
#include "cvc/optim.hpp"

using namespace cvc;

namespace {

std::vector<Tensor> random_frames(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Tensor> frames;
    for (std::size_t t = 0; t < n; ++t) {
        Tensor f({dim});
        for (std::size_t i = 0; i < dim; ++i) f[i] = gauss(rng);
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<LabeledFeature> labeled_from_corpus(
    const std::vector<std::pair<FeatureSequence, AttributeTriple>>& corpus) {
    std::vector<LabeledFeature> out;
    for (const auto& [seq, triple] : corpus) {
        LabeledFeature lf;
        lf.feature = whole_video_feature(seq);
        lf.label = class_id(triple);
        out.push_back(std::move(lf));
    }
    return out;
}

std::vector<CaptionSample> samples_from_corpus(
    const std::vector<std::pair<FeatureSequence, AttributeTriple>>& corpus) {
    std::vector<CaptionSample> out;
    for (const auto& [seq, triple] : corpus) {
        out.push_back({seq.frames, render_caption(triple)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plain-math forward pass, written without the tape: the decomposition
// oracle for caption_forward_loss. Recomputes -sum log softmax(target)
// step by step from the raw parameter tensors.
// ---------------------------------------------------------------------------

using Vec = std::vector<double>;

Vec plain_matvec(const Tensor& m, const Vec& x) {
    Vec y(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) y[i] += m.at(i, j) * x[j];
    }
    return y;
}

struct PlainCell {
    const Tensor& w;
    const Tensor& u;
    const Tensor& b;
    CellKind kind;
    std::size_t hd;

    void step(const Vec& x, Vec& h, Vec& c) const {
        Vec wx = plain_matvec(w, x);
        Vec uh = plain_matvec(u, h);
        auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        if (kind == CellKind::Lstm) {
            Vec nh(hd), nc(hd);
            for (std::size_t i = 0; i < hd; ++i) {
                double gi = sig(wx[i] + uh[i] + b[i]);
                double gf = sig(wx[hd + i] + uh[hd + i] + b[hd + i]);
                double gg = std::tanh(wx[2 * hd + i] + uh[2 * hd + i] + b[2 * hd + i]);
                double go = sig(wx[3 * hd + i] + uh[3 * hd + i] + b[3 * hd + i]);
                nc[i] = gf * c[i] + gi * gg;
                nh[i] = go * std::tanh(nc[i]);
            }
            h = nh;
            c = nc;
        } else {
            Vec nh(hd);
            for (std::size_t i = 0; i < hd; ++i) {
                double z = sig(wx[i] + b[i] + uh[i]);
                double r = sig(wx[hd + i] + b[hd + i] + uh[hd + i]);
                double n = std::tanh(wx[2 * hd + i] + b[2 * hd + i] + r * uh[2 * hd + i]);
                nh[i] = (1.0 - z) * n + z * h[i];
            }
            h = nh;
        }
    }
};

double plain_caption_loss(const S2VTModel& model, const std::vector<Tensor>& frames,
                          const std::vector<std::size_t>& target) {
    const auto& cfg = model.config();
    const ParameterStore& store = model.params();
    PlainCell l1{store.value("layer1/W"), store.value("layer1/U"), store.value("layer1/b"),
                 cfg.cell_kind, cfg.hidden_dim};
    PlainCell l2{store.value("layer2/W"), store.value("layer2/U"), store.value("layer2/b"),
                 cfg.cell_kind, cfg.hidden_dim};
    const Tensor& embed = store.value("embed");
    const Tensor& pw = store.value("proj/W");
    const Tensor& pb = store.value("proj/b");

    Vec h1(cfg.hidden_dim, 0.0), c1(cfg.hidden_dim, 0.0);
    Vec h2(cfg.hidden_dim, 0.0), c2(cfg.hidden_dim, 0.0);
    auto embed_row = [&](std::size_t id) {
        Vec e(cfg.embed_dim);
        for (std::size_t i = 0; i < cfg.embed_dim; ++i) e[i] = embed.at(id, i);
        return e;
    };
    auto stack = [&](const Vec& frame, std::size_t word) {
        l1.step(frame, h1, c1);
        Vec joined = h1;
        Vec w = embed_row(word);
        joined.insert(joined.end(), w.begin(), w.end());
        l2.step(joined, h2, c2);
    };

    for (const auto& f : frames) {
        Vec x(f.values());
        stack(x, Vocabulary::kPadId);
    }
    Vec zero(cfg.feature_dim, 0.0);
    double loss = 0.0;
    std::size_t steps = 0;
    while (target[steps] != Vocabulary::kEosId) ++steps;
    for (std::size_t i = 0; i < steps; ++i) {
        stack(zero, target[i]);
        Vec logits = plain_matvec(pw, h2);
        double max_logit = logits[0] + pb[0];
        for (std::size_t j = 0; j < logits.size(); ++j) {
            logits[j] += pb[j];
            max_logit = std::max(max_logit, logits[j]);
        }
        double denom = 0.0;
        for (double v : logits) denom += std::exp(v - max_logit);
        loss -= (logits[target[i + 1]] - max_logit) - std::log(denom);
    }
    return loss;
}

} // namespace

// --- classifier -------------------------------------------------------------

TEST_CASE("classify with zero parameters is uniform with lowest-id argmax") {
    ParameterStore store;
    store.create("classifier/W", {kNumLabels, 16});
    store.create("classifier/b", {kNumLabels});
    Tensor f({16});
    f.fill(0.5);
    ClassifyResult result = classify(store, f);
    double sum = 0.0;
    for (std::size_t i = 0; i < kNumLabels; ++i) {
        CHECK(result.probabilities[i] == doctest::Approx(0.125).epsilon(1e-12));
        sum += result.probabilities[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.class_id == 0);
}

TEST_CASE("a +10 logit dominates the softmax") {
    ParameterStore store;
    store.create("classifier/W", {kNumLabels, 4});
    store.create("classifier/b", {kNumLabels});
    store.value("classifier/b")[3] = 10.0;
    ClassifyResult result = classify(store, Tensor({4}));
    CHECK(result.class_id == 3);
    CHECK(result.probabilities[3] > 0.999);
}

TEST_CASE("classify rejects a feature of the wrong length") {
    ParameterStore store;
    ClassifierConfig config;
    config.input_dim = 8;
    init_classifier(store, config);
    CHECK_THROWS_AS(classify(store, Tensor({9})), ShapeMismatch);
}

TEST_CASE("zero training epochs leave the classifier at its initialization") {
    ClassifierConfig config;
    config.input_dim = 64;
    config.epochs = 0;
    config.seed = 21;
    ParameterStore trained, fresh;
    init_classifier(trained, config);
    init_classifier(fresh, config);
    GeneratorConfig gen;
    gen.num_videos = 8;
    gen.balanced = true;
    auto data = labeled_from_corpus(generate_corpus(gen));
    auto trace = train_classifier(trained, data, {}, config);
    CHECK(trace.empty());
    for (const auto& name : fresh.names()) {
        const Tensor& a = fresh.value(name);
        const Tensor& b = trained.value(name);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("classifier memorizes 8 noise-free videos within 500 epochs") {
    GeneratorConfig gen;
    gen.num_videos = 8;
    gen.balanced = true;
    gen.noise_scale = 0.0;
    gen.seed = 4;
    auto data = labeled_from_corpus(generate_corpus(gen));

    ClassifierConfig config;
    config.input_dim = gen.feature_dim;
    config.epochs = 500;
    config.seed = 1;
    config.schedule = {0.5, 0.5, 100};
    ParameterStore store;
    init_classifier(store, config);
    auto trace = train_classifier(store, data, {}, config);

    std::size_t correct = 0;
    for (const auto& s : data) {
        if (classify(store, s.feature).class_id == s.label) ++correct;
    }
    CHECK(correct == 8);
}

TEST_CASE("classifier training is deterministic given the seed") {
    GeneratorConfig gen;
    gen.num_videos = 12;
    gen.seed = 6;
    auto data = labeled_from_corpus(generate_corpus(gen));
    ClassifierConfig config;
    config.input_dim = gen.feature_dim;
    config.epochs = 10;
    config.seed = 9;
    auto run = [&] {
        ParameterStore store;
        init_classifier(store, config);
        return train_classifier(store, data, {}, config);
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].loss == b[i].loss); // bit-identical
        CHECK(a[i].train_accuracy == b[i].train_accuracy);
    }
    ParameterStore empty_store;
    init_classifier(empty_store, config);
    CHECK_THROWS_AS(train_classifier(empty_store, {}, {}, config), EmptyDataset);
}

// --- captioner ----------------------------------------------------------------

namespace {

S2VTConfig small_config(CellKind kind, std::uint64_t seed) {
    S2VTConfig config;
    config.feature_dim = 16;
    config.hidden_dim = 16;
    config.embed_dim = 8;
    config.cell_kind = kind;
    config.seed = seed;
    return config;
}

} // namespace

TEST_CASE("untrained caption loss sits near the uniform-prediction estimate") {
    for (CellKind kind : {CellKind::Gru, CellKind::Lstm}) {
        S2VTModel model(small_config(kind, 3), Vocabulary());
        std::mt19937_64 rng(17);
        auto frames = random_frames(5, 16, rng);
        auto target = encode_tokens(caption_from_text("many people walk in"), model.vocab(), 8);
        double loss = model.forward_loss(frames, target);
        double estimate = 5.0 * std::log(10.0); // 4 words + EOS, vocab 10
        CHECK(loss > 0.8 * estimate);
        CHECK(loss < 1.2 * estimate);
    }
}

TEST_CASE("caption loss equals the step-by-step decomposition oracle") {
    for (CellKind kind : {CellKind::Gru, CellKind::Lstm}) {
        S2VTModel model(small_config(kind, 11), Vocabulary());
        std::mt19937_64 rng(23);
        auto frames = random_frames(4, 16, rng);
        for (const auto& label : all_labels()) {
            auto target = encode_tokens(label, model.vocab(), 8);
            double tape_loss = model.forward_loss(frames, target);
            double oracle_loss = plain_caption_loss(model, frames, target);
            CHECK(tape_loss == doctest::Approx(oracle_loss).epsilon(1e-10));
        }
    }
}

TEST_CASE("caption loss input validation") {
    S2VTModel model(small_config(CellKind::Gru, 1), Vocabulary());
    std::mt19937_64 rng(29);
    auto target = encode_tokens(caption_from_text("few people run out"), model.vocab(), 8);
    CHECK_THROWS_AS(model.forward_loss({}, target), EmptyFeatureSequence);
    auto bad_frames = random_frames(3, 7, rng);
    CHECK_THROWS_AS(model.forward_loss(bad_frames, target), ShapeMismatch);
    auto frames = random_frames(3, 16, rng);
    CHECK_THROWS_AS(model.forward_loss(frames, {Vocabulary::kBosId}), ShapeMismatch);
}

TEST_CASE("captioner end-to-end gradient matches finite differences") {
    for (CellKind kind : {CellKind::Gru, CellKind::Lstm}) {
        S2VTConfig config;
        config.feature_dim = 6;
        config.hidden_dim = 5;
        config.embed_dim = 4;
        config.cell_kind = kind;
        config.seed = 31;
        S2VTModel model(config, Vocabulary());
        std::mt19937_64 rng(37);
        std::vector<CaptionSample> samples = {
            {random_frames(3, 6, rng), caption_from_text("many people walk in")},
            {random_frames(4, 6, rng), caption_from_text("few people run out")}};
        auto loss = [&] { return accumulate_caption_gradients(model, samples); };
        auto report = grad_check(loss, model.params(), 1e-5, 100, 41);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("greedy decode terminates, emits only content tokens and is deterministic") {
    S2VTModel model(small_config(CellKind::Gru, 5), Vocabulary());
    std::mt19937_64 rng(43);
    auto frames = random_frames(6, 16, rng);
    Caption a = model.decode(frames);
    Caption b = model.decode(frames);
    CHECK(a == b);
    CHECK(a.length() <= model.config().max_caption_len);
    for (const auto& tok : a.tokens) {
        CHECK(model.vocab().contains(tok));
        CHECK(model.vocab().id_of(tok) >= 3);
    }
}

TEST_CASE("captioner overfits a single sample and reproduces it") {
    S2VTConfig config = small_config(CellKind::Gru, 7);
    config.schedule = {0.5, 0.8, 400};
    S2VTModel model(config, Vocabulary());
    std::mt19937_64 rng(47);
    Caption target = caption_from_text("many people walk in");
    std::vector<CaptionSample> samples = {{random_frames(4, 16, rng), target}};

    double loss = 1e9;
    for (std::size_t epoch = 0; epoch < 800 && loss >= 0.01; ++epoch) {
        loss = accumulate_caption_gradients(model, samples);
        sgd_step(model.params(), config.schedule, epoch, config.clip_norm);
    }
    CHECK(loss < 0.01);
    CHECK(model.decode(samples[0].frames) == target);
}

TEST_CASE("zero-epoch training leaves the captioner at its initialization") {
    S2VTConfig config = small_config(CellKind::Lstm, 13);
    config.max_epochs = 0;
    S2VTModel trained(config, Vocabulary());
    S2VTModel fresh(config, Vocabulary());
    GeneratorConfig gen;
    gen.num_videos = 2;
    gen.feature_dim = 16;
    gen.frames_per_video = 3;
    auto trace = train_captioner(trained, samples_from_corpus(generate_corpus(gen)), {});
    CHECK(trace.empty());
    for (const auto& name : fresh.params().names()) {
        const Tensor& a = fresh.params().value(name);
        const Tensor& b = trained.params().value(name);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("captioner training is deterministic and its trace logs the schedule") {
    GeneratorConfig gen;
    gen.num_videos = 3;
    gen.feature_dim = 16;
    gen.frames_per_video = 3;
    gen.seed = 51;
    auto samples = samples_from_corpus(generate_corpus(gen));
    S2VTConfig config = small_config(CellKind::Gru, 53);
    config.max_epochs = 5;
    config.schedule = {0.1, 0.5, 2};
    auto run = [&] {
        S2VTModel model(config, Vocabulary());
        return train_captioner(model, samples, {});
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].loss == b[i].loss);
        CHECK(a[i].lr == config.schedule.lr(i));
    }
    CHECK(a[0].lr == doctest::Approx(0.1));
    CHECK(a[2].lr == doctest::Approx(0.05));
    CHECK(a[4].lr == doctest::Approx(0.025));
}

TEST_CASE("model checkpoints round-trip and reject vocabulary mismatches") {
    S2VTConfig config = small_config(CellKind::Gru, 61);
    S2VTModel model(config, Vocabulary());
    std::mt19937_64 rng(67);
    auto frames = random_frames(4, 16, rng);
    Caption before = model.decode(frames);

    auto path = std::filesystem::temp_directory_path() / "cvc_model_test.cvcp";
    model.save(path);
    S2VTModel loaded = S2VTModel::load(path, Vocabulary());
    CHECK(loaded.decode(frames) == before);
    CHECK(loaded.config().cell_kind == CellKind::Gru);
    CHECK(loaded.config().feature_dim == 16);
    std::filesystem::remove(path);

    // classifier checkpoints are not captioner models
    ParameterStore store;
    ClassifierConfig cc;
    cc.input_dim = 4;
    init_classifier(store, cc);
    auto clf_path = std::filesystem::temp_directory_path() / "cvc_clf_test.cvcp";
    CheckpointHeader header{{"kind", "classifier"}};
    save_checkpoint(clf_path, store, header);
    CHECK_THROWS_AS(S2VTModel::load(clf_path, Vocabulary()), IncompatibleCheckpoint);
    std::filesystem::remove(clf_path);
}

TEST_CASE("sentence accuracy counts exact matches") {
    auto labels = all_labels();
    CHECK(sentence_accuracy(labels, labels) == 1.0);

    auto off_by_one = labels;
    off_by_one[5] = caption_from_text("many people walk in");
    CHECK(sentence_accuracy(off_by_one, labels) == doctest::Approx(0.875));

    auto off_by_two = off_by_one;
    off_by_two[6] = caption_from_text("many people walk in");
    CHECK(sentence_accuracy(off_by_two, labels) == doctest::Approx(0.75));

    std::vector<Caption> shorter(labels.begin(), labels.begin() + 4);
    CHECK_THROWS_AS(sentence_accuracy(shorter, labels), LengthMismatch);
}
