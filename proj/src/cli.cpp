#include "cvc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cvc/checkpoint.hpp"
#include "cvc/data.hpp"
#include "cvc/errors.hpp"
#include "cvc/grammar.hpp"
#include "cvc/metrics.hpp"
#include "cvc/models.hpp"
#include "cvc/verify.hpp"

namespace cvc {

namespace {

namespace fs = std::filesystem;

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IoFailure("failed writing: " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string trace_to_tsv(const std::vector<EpochStats>& trace) {
    std::string out = "epoch\tlr\tloss\ttrain_acc\tval_acc\n";
    for (const auto& row : trace) {
        out += std::to_string(row.epoch) + '\t' + format_double(row.lr) + '\t' +
               format_double(row.loss) + '\t' + format_double(row.train_accuracy) + '\t' +
               format_double(row.val_accuracy) + '\n';
    }
    return out;
}

struct LoadedDataset {
    std::vector<CaptionSample> train, val, test;
    std::vector<std::string> test_ids;
    std::size_t feature_dim = 0;
};

LoadedDataset load_dataset(const fs::path& data_dir) {
    DatasetManifest manifest = load_manifest(data_dir / "manifest.tsv");
    LoadedDataset ds;
    for (const auto& rec : manifest.records) {
        if (rec.split == "unused") continue;
        CaptionSample sample;
        FeatureSequence seq = load_features(data_dir / rec.feature_path);
        ds.feature_dim = seq.frames.front().size();
        sample.frames = std::move(seq.frames);
        sample.caption = rec.caption;
        if (rec.split == "train") {
            ds.train.push_back(std::move(sample));
        } else if (rec.split == "val") {
            ds.val.push_back(std::move(sample));
        } else {
            ds.test_ids.push_back(rec.video_id);
            ds.test.push_back(std::move(sample));
        }
    }
    return ds;
}

std::array<std::size_t, 3> parse_split_counts(const std::string& text) {
    std::array<std::size_t, 3> counts{};
    std::istringstream in(text);
    std::string part;
    std::size_t i = 0;
    while (std::getline(in, part, ',')) {
        if (i >= 3) throw InvalidConfig("--split takes exactly three comma-separated counts");
        counts[i++] = static_cast<std::size_t>(std::stoull(part));
    }
    if (i != 3) throw InvalidConfig("--split takes exactly three comma-separated counts");
    return counts;
}

// --- gen-data ---------------------------------------------------------------

struct GenDataOpts {
    std::string out;
    std::string split;
    GeneratorConfig config;
};

int cmd_gen_data(const GenDataOpts& opts, const std::string& resolved_config) {
    fs::path out_dir(opts.out);
    DatasetManifest manifest = generate_dataset(opts.config, out_dir);
    if (!opts.split.empty()) {
        split_dataset(manifest, parse_split_counts(opts.split), opts.config.seed);
        save_manifest(out_dir / "manifest.tsv", manifest);
    }
    write_text_file(out_dir / "config.resolved", resolved_config);
    std::cout << "wrote " << manifest.records.size() << " videos to " << out_dir.string() << "\n";
    return 0;
}

// --- train ------------------------------------------------------------------

struct TrainOpts {
    std::string model;
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
    std::int64_t epochs = -1;
    double lr = -1.0;
    double decay = -1.0;
    std::size_t period = 0;
    double clip = 5.0;
    std::string cell = "gru";
    std::size_t hidden = 512;
    std::size_t embed = 0; // 0 -> same as hidden
    std::size_t max_caption_len = 8;
    double stop_at_acc = 2.0;
};

int train_classifier_cmd(const TrainOpts& opts, const LoadedDataset& ds, const fs::path& out_dir) {
    ClassifierConfig config;
    config.input_dim = ds.feature_dim;
    config.seed = opts.seed;
    config.clip_norm = opts.clip;
    config.epochs = opts.epochs < 0 ? 100 : static_cast<std::size_t>(opts.epochs);
    config.schedule.base_lr = opts.lr < 0 ? 1e-4 : opts.lr;
    config.schedule.factor = opts.decay < 0 ? 0.5 : opts.decay;
    config.schedule.period = opts.period == 0 ? 10 : opts.period;

    auto to_labeled = [](const std::vector<CaptionSample>& samples) {
        std::vector<LabeledFeature> out;
        out.reserve(samples.size());
        for (const auto& s : samples) {
            FeatureSequence seq;
            seq.frames = s.frames;
            LabeledFeature lf;
            lf.feature = whole_video_feature(seq);
            lf.label = class_id(parse_caption(s.caption));
            out.push_back(std::move(lf));
        }
        return out;
    };

    ParameterStore store;
    init_classifier(store, config);
    auto trace = train_classifier(store, to_labeled(ds.train), to_labeled(ds.val), config);
    write_text_file(out_dir / "trace.tsv", trace_to_tsv(trace));
    CheckpointHeader header;
    header["kind"] = "classifier";
    header["input_dim"] = std::to_string(config.input_dim);
    header["num_classes"] = std::to_string(config.num_classes);
    save_checkpoint(out_dir / "classifier.cvcp", store, header);
    if (!trace.empty()) {
        std::cout << "final train_acc=" << trace.back().train_accuracy
                  << " val_acc=" << trace.back().val_accuracy << "\n";
    }
    return 0;
}

int train_captioner_cmd(const TrainOpts& opts, const LoadedDataset& ds, const fs::path& out_dir) {
    S2VTConfig config;
    config.feature_dim = ds.feature_dim;
    config.hidden_dim = opts.hidden;
    config.embed_dim = opts.embed == 0 ? opts.hidden : opts.embed;
    config.cell_kind = cell_kind_from_string(opts.cell);
    config.max_caption_len = opts.max_caption_len;
    config.seed = opts.seed;
    config.clip_norm = opts.clip;
    config.max_epochs = opts.epochs < 0 ? 2000 : static_cast<std::size_t>(opts.epochs);
    config.schedule.base_lr = opts.lr < 0 ? 4e-5 : opts.lr;
    config.schedule.factor = opts.decay < 0 ? 0.8 : opts.decay;
    config.schedule.period = opts.period == 0 ? 200 : opts.period;
    config.early_stop_accuracy = opts.stop_at_acc;

    S2VTModel model(config, Vocabulary());
    auto trace = train_captioner(model, ds.train, ds.val);
    write_text_file(out_dir / "trace.tsv", trace_to_tsv(trace));
    model.save(out_dir / "captioner.cvcp");
    if (!trace.empty()) {
        std::cout << "final train_acc=" << trace.back().train_accuracy
                  << " loss=" << trace.back().loss << "\n";
    }
    return 0;
}

int cmd_train(const TrainOpts& opts, const std::string& resolved_config) {
    fs::path out_dir(opts.out);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create output directory: " + out_dir.string());
    LoadedDataset ds = load_dataset(opts.data);
    if (ds.train.empty()) throw EmptyDataset("no records tagged train in the manifest");
    write_text_file(out_dir / "config.resolved", resolved_config);
    if (opts.model == "classifier") return train_classifier_cmd(opts, ds, out_dir);
    return train_captioner_cmd(opts, ds, out_dir);
}

// --- caption ------------------------------------------------------------------

struct CaptionOpts {
    std::string model;
    std::vector<std::string> feature_files;
    std::string data;
    std::string split = "test";
    std::string out;
};

int cmd_caption(const CaptionOpts& opts) {
    if (!opts.feature_files.empty() && !opts.data.empty()) {
        throw InvalidConfig("pass feature files or --data, not both");
    }
    Vocabulary vocab;
    S2VTModel model = S2VTModel::load(opts.model, vocab);

    std::vector<FeatureSequence> inputs;
    if (!opts.data.empty()) {
        DatasetManifest manifest = load_manifest(fs::path(opts.data) / "manifest.tsv");
        for (const auto& rec : manifest.records) {
            if (rec.split == opts.split) {
                inputs.push_back(load_features(fs::path(opts.data) / rec.feature_path));
            }
        }
    } else {
        for (const auto& file : opts.feature_files) inputs.push_back(load_features(file));
    }

    std::string lines;
    for (const auto& seq : inputs) {
        lines += model.decode(seq.frames).text();
        lines += '\n';
    }
    std::cout << lines;
    if (!opts.out.empty()) write_text_file(opts.out, lines);
    return 0;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateOpts {
    std::string hyp;
    std::string ref;
    std::string out;
};

std::vector<Sentence> read_sentences(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open sentence file: " + path.string());
    std::vector<Sentence> sentences;
    std::string line;
    while (std::getline(in, line)) sentences.push_back(tokenize(line));
    return sentences;
}

int cmd_evaluate(const EvaluateOpts& opts) {
    auto hyp = read_sentences(opts.hyp);
    auto ref = read_sentences(opts.ref);
    if (hyp.size() != ref.size()) {
        throw LengthMismatch("hypothesis and reference files differ in line count");
    }
    EvalReport report = build_report(hyp, ref);
    std::string text = render_table(report) + "\n" + render_key_values(report);
    std::cout << text;
    if (!opts.out.empty()) write_text_file(opts.out, text);
    return 0;
}

// --- gradcheck ------------------------------------------------------------------

struct GradcheckOpts {
    double tolerance = 1e-4;
    std::size_t seeds = 10;
    std::size_t samples = 100;
    bool inject_error = false;
};

int cmd_gradcheck(const GradcheckOpts& opts) {
    std::map<std::string, double> worst;
    for (std::uint64_t seed = 0; seed < opts.seeds; ++seed) {
        auto summary = run_gradient_checks(seed, opts.samples, opts.inject_error && seed == 0);
        for (const auto& [name, err] : summary.component_errors) {
            worst[name] = std::max(worst[name], err);
        }
    }
    double overall = 0.0;
    for (const auto& [name, err] : worst) {
        std::cout << name << " max_rel_error=" << format_double(err) << "\n";
        overall = std::max(overall, err);
    }
    std::cout << "overall max_rel_error=" << format_double(overall)
              << " tolerance=" << format_double(opts.tolerance) << "\n";
    return overall < opts.tolerance ? 0 : 6;
}

} // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"crowd video captioning toolkit"};
    app.require_subcommand(1);

    GenDataOpts gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen_cmd->set_config("--config");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--seed", gen.config.seed, "RNG seed");
    gen_cmd->add_option("--num-videos", gen.config.num_videos, "number of videos");
    gen_cmd->add_option("--frames", gen.config.frames_per_video, "frames per video");
    gen_cmd->add_option("--dim", gen.config.feature_dim, "feature dimension");
    gen_cmd->add_option("--noise", gen.config.noise_scale, "feature noise sigma");
    gen_cmd->add_option("--run-fraction", gen.config.run_fraction, "P(movement = run)");
    gen_cmd->add_flag("--balanced", gen.config.balanced, "round-robin over the 8 labels");
    gen_cmd->add_option("--split", gen.split, "train,val,test counts (e.g. 70,19,9)");

    TrainOpts train;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->set_config("--config");
    train_cmd->add_option("model", train.model, "classifier or captioner")
        ->required()
        ->check(CLI::IsMember({"classifier", "captioner"}));
    train_cmd->add_option("--data", train.data, "dataset directory")->required();
    train_cmd->add_option("--out", train.out, "output directory")->required();
    train_cmd->add_option("--seed", train.seed, "init seed");
    train_cmd->add_option("--epochs", train.epochs, "epoch count (model default when omitted)");
    train_cmd->add_option("--lr", train.lr, "base learning rate");
    train_cmd->add_option("--decay", train.decay, "schedule decay factor");
    train_cmd->add_option("--period", train.period, "schedule period in epochs");
    train_cmd->add_option("--clip", train.clip, "global gradient-norm clip (0 disables)");
    train_cmd->add_option("--cell", train.cell, "captioner cell: lstm or gru")
        ->check(CLI::IsMember({"lstm", "gru"}));
    train_cmd->add_option("--hidden", train.hidden, "captioner hidden dimension");
    train_cmd->add_option("--embed", train.embed, "word embedding dimension (0 = hidden)");
    train_cmd->add_option("--max-caption-len", train.max_caption_len, "max caption length");
    train_cmd->add_option("--stop-at-acc", train.stop_at_acc,
                          "stop once train sentence accuracy reaches this");

    CaptionOpts caption;
    CLI::App* caption_cmd = app.add_subcommand("caption", "decode captions for feature files");
    caption_cmd->add_option("--model", caption.model, "captioner checkpoint")->required();
    caption_cmd->add_option("features", caption.feature_files, "feature files (.cvcf)");
    caption_cmd->add_option("--data", caption.data, "dataset directory (with --split)");
    caption_cmd->add_option("--split", caption.split, "split tag to caption");
    caption_cmd->add_option("--out", caption.out, "also write captions to this file");

    EvaluateOpts evaluate;
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score hypotheses against references");
    evaluate_cmd->add_option("--hyp", evaluate.hyp, "hypothesis file, one sentence per line")
        ->required();
    evaluate_cmd->add_option("--ref", evaluate.ref, "reference file, one sentence per line")
        ->required();
    evaluate_cmd->add_option("--out", evaluate.out, "also write the report to this file");

    GradcheckOpts gradcheck;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance, "max relative error allowed");
    gradcheck_cmd->add_option("--seeds", gradcheck.seeds, "number of seeds");
    gradcheck_cmd->add_option("--samples", gradcheck.samples,
                              "sampled coordinates per captioner parameter");
    gradcheck_cmd->add_flag("--inject-error", gradcheck.inject_error,
                            "corrupt one gradient (harness self-test)")
        ->group("");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen, gen_cmd->config_to_str(true, false));
        if (train_cmd->parsed()) return cmd_train(train, train_cmd->config_to_str(true, false));
        if (caption_cmd->parsed()) return cmd_caption(caption);
        if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck);
    } catch (const IoFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const CorruptFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NonFiniteLoss& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const IncompatibleCheckpoint& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const ShapeMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace cvc
