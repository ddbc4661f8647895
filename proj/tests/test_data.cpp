#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cvc/data.hpp"
#include "cvc/errors.hpp"
#include "cvc/grammar.hpp"

using namespace cvc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("feature files round-trip bit-exactly") {
    auto dir = temp_dir("cvc_data_roundtrip");
    GeneratorConfig config;
    config.num_videos = 3;
    config.seed = 42;
    auto corpus = generate_corpus(config);
    for (const auto& [seq, triple] : corpus) {
        auto path = dir / (seq.video_id + ".cvcf");
        save_features(path, seq);
        FeatureSequence loaded = load_features(path);
        REQUIRE(loaded.frames.size() == seq.frames.size());
        for (std::size_t t = 0; t < seq.frames.size(); ++t) {
            REQUIRE(loaded.frames[t].size() == seq.frames[t].size());
            for (std::size_t i = 0; i < seq.frames[t].size(); ++i) {
                CHECK(loaded.frames[t][i] == seq.frames[t][i]);
            }
        }
        // save(load(file)) reproduces the file byte for byte
        auto copy = dir / "copy.cvcf";
        save_features(copy, loaded);
        CHECK(file_bytes(path) == file_bytes(copy));
    }
    fs::remove_all(dir);
}

TEST_CASE("feature loader rejects malformed files") {
    auto dir = temp_dir("cvc_data_corrupt");

    auto wrong_magic = dir / "bad.cvcf";
    {
        std::ofstream out(wrong_magic, std::ios::binary);
        out << "XXXXjunkjunkjunk";
    }
    CHECK_THROWS_AS(load_features(wrong_magic), CorruptFile);

    // header claims 16 frames but payload holds 15
    GeneratorConfig config;
    config.num_videos = 1;
    config.frames_per_video = 16;
    auto corpus = generate_corpus(config);
    auto truncated = dir / "trunc.cvcf";
    save_features(truncated, corpus[0].first);
    auto size = fs::file_size(truncated);
    fs::resize_file(truncated, size - config.feature_dim * sizeof(float));
    CHECK_THROWS_AS(load_features(truncated), CorruptFile);

    CHECK_THROWS_AS(load_features(dir / "missing.cvcf"), IoFailure);
    fs::remove_all(dir);
}

TEST_CASE("generation is a pure function of the config") {
    GeneratorConfig config;
    config.seed = 7;
    config.num_videos = 6;
    config.noise_scale = 0.25;
    auto a = generate_corpus(config);
    auto b = generate_corpus(config);
    REQUIRE(a.size() == b.size());
    for (std::size_t v = 0; v < a.size(); ++v) {
        CHECK(a[v].second == b[v].second);
        for (std::size_t t = 0; t < a[v].first.frames.size(); ++t) {
            for (std::size_t i = 0; i < a[v].first.frames[t].size(); ++i) {
                CHECK(a[v].first.frames[t][i] == b[v].first.frames[t][i]);
            }
        }
    }
}

TEST_CASE("gen-data twice writes byte-identical artifacts") {
    auto dir_a = temp_dir("cvc_gen_a");
    auto dir_b = temp_dir("cvc_gen_b");
    GeneratorConfig config;
    config.seed = 9;
    config.num_videos = 8;
    config.balanced = true;
    generate_dataset(config, dir_a);
    generate_dataset(config, dir_b);
    CHECK(file_bytes(dir_a / "manifest.tsv") == file_bytes(dir_b / "manifest.tsv"));
    CHECK(file_bytes(dir_a / "vocab.txt") == file_bytes(dir_b / "vocab.txt"));
    for (std::size_t v = 0; v < 8; ++v) {
        char name[32];
        std::snprintf(name, sizeof(name), "features/vid%04zu.cvcf", v);
        CHECK(file_bytes(dir_a / name) == file_bytes(dir_b / name));
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("balanced mode covers each label exactly once per 8 videos") {
    GeneratorConfig config;
    config.num_videos = 8;
    config.balanced = true;
    auto corpus = generate_corpus(config);
    std::set<std::size_t> classes;
    for (const auto& [seq, triple] : corpus) classes.insert(class_id(triple));
    CHECK(classes.size() == 8);
}

TEST_CASE("every generated caption parses back to its triple") {
    GeneratorConfig config;
    config.num_videos = 40;
    config.seed = 3;
    for (const auto& [seq, triple] : generate_corpus(config)) {
        CHECK(parse_caption(render_caption(triple)) == triple);
    }
}

TEST_CASE("run fraction controls the Run share (Monte Carlo)") {
    double total_share = 0.0;
    const std::size_t seeds = 50;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        GeneratorConfig config;
        config.seed = seed;
        config.num_videos = 100;
        config.frames_per_video = 2; // movement stats only; keep it cheap
        config.run_fraction = 0.21;
        std::size_t runs = 0;
        for (const auto& [seq, triple] : generate_corpus(config)) {
            if (triple.movement == Movement::Run) ++runs;
        }
        total_share += static_cast<double>(runs) / 100.0;
    }
    double mean_share = total_share / static_cast<double>(seeds);
    CHECK(mean_share > 0.16);
    CHECK(mean_share < 0.26);
}

TEST_CASE("noise-free class means separate by construction") {
    GeneratorConfig config;
    config.num_videos = 8;
    config.balanced = true;
    config.noise_scale = 0.0;
    auto corpus = generate_corpus(config);
    std::map<std::size_t, Tensor> means;
    for (const auto& [seq, triple] : corpus) {
        FeatureSequence copy = seq;
        means.emplace(class_id(triple), whole_video_feature(copy));
    }
    // orthogonal bases scaled by 3: pairwise distance is at least 3*sqrt(2)
    // before drift; drift shifts along each class's own axis only
    for (const auto& [ca, ma] : means) {
        for (const auto& [cb, mb] : means) {
            if (ca == cb) continue;
            double dist = 0.0;
            for (std::size_t i = 0; i < ma.size(); ++i) {
                dist += (ma[i] - mb[i]) * (ma[i] - mb[i]);
            }
            CHECK(std::sqrt(dist) > 3.0);
        }
    }
}

TEST_CASE("invalid generator configs are rejected") {
    GeneratorConfig config;
    config.num_videos = 0;
    CHECK_THROWS_AS(config.validate(), InvalidConfig);
    config = {};
    config.feature_dim = 4; // cannot hold 8 orthogonal bases
    CHECK_THROWS_AS(config.validate(), InvalidConfig);
    config = {};
    config.run_fraction = 1.5;
    CHECK_THROWS_AS(config.validate(), InvalidConfig);
    config = {};
    config.noise_scale = -0.1;
    CHECK_THROWS_AS(config.validate(), InvalidConfig);
}

TEST_CASE("split_dataset partitions by counts deterministically") {
    GeneratorConfig config;
    config.num_videos = 98;
    config.frames_per_video = 1;
    auto dir = temp_dir("cvc_split");
    DatasetManifest manifest = generate_dataset(config, dir);

    split_dataset(manifest, {70, 19, 9}, 5);
    std::map<std::string, std::size_t> counts;
    for (const auto& r : manifest.records) ++counts[r.split];
    CHECK(counts["train"] == 70);
    CHECK(counts["val"] == 19);
    CHECK(counts["test"] == 9);

    DatasetManifest again = load_manifest(dir / "manifest.tsv");
    split_dataset(again, {70, 19, 9}, 5);
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        CHECK(again.records[i].split == manifest.records[i].split);
    }

    // 45:4 with the remainder unused
    split_dataset(manifest, {45, 0, 4}, 5);
    counts.clear();
    for (const auto& r : manifest.records) ++counts[r.split];
    CHECK(counts["train"] == 45);
    CHECK(counts["val"] == 0);
    CHECK(counts["test"] == 4);
    CHECK(counts["unused"] == 49);

    CHECK_THROWS_AS(split_dataset(manifest, {98, 1, 0}, 5), InsufficientRecords);
    fs::remove_all(dir);
}

TEST_CASE("manifest loading validates captions and referenced files") {
    auto dir = temp_dir("cvc_manifest");
    GeneratorConfig config;
    config.num_videos = 2;
    generate_dataset(config, dir);

    DatasetManifest loaded = load_manifest(dir / "manifest.tsv");
    CHECK(loaded.records.size() == 2);

    // caption outside the 8-label set
    {
        std::ofstream out(dir / "manifest.tsv", std::ios::trunc);
        out << "vid0000\tfeatures/vid0000.cvcf\tmany people dance in\ttrain\n";
    }
    CHECK_THROWS_AS(load_manifest(dir / "manifest.tsv"), NotALabel);

    // missing feature file
    {
        std::ofstream out(dir / "manifest.tsv", std::ios::trunc);
        out << "vid0000\tfeatures/nope.cvcf\tmany people walk in\ttrain\n";
    }
    CHECK_THROWS_AS(load_manifest(dir / "manifest.tsv"), CorruptFile);

    // duplicate ids
    {
        std::ofstream out(dir / "manifest.tsv", std::ios::trunc);
        out << "vid0000\tfeatures/vid0000.cvcf\tmany people walk in\ttrain\n";
        out << "vid0000\tfeatures/vid0001.cvcf\tmany people walk in\ttrain\n";
    }
    CHECK_THROWS_AS(load_manifest(dir / "manifest.tsv"), CorruptFile);
    fs::remove_all(dir);
}

TEST_CASE("whole_video_feature is the frame mean, or the single frame") {
    FeatureSequence seq;
    seq.frames.push_back(Tensor({2}, {1.0, 3.0}));
    seq.frames.push_back(Tensor({2}, {3.0, 5.0}));
    Tensor mean = whole_video_feature(seq);
    CHECK(mean[0] == doctest::Approx(2.0));
    CHECK(mean[1] == doctest::Approx(4.0));

    FeatureSequence single;
    single.frames.push_back(Tensor({2}, {7.0, 9.0}));
    Tensor direct = whole_video_feature(single);
    CHECK(direct[0] == 7.0);
    CHECK(direct[1] == 9.0);

    FeatureSequence empty;
    CHECK_THROWS_AS(whole_video_feature(empty), EmptyFeatureSequence);
}
