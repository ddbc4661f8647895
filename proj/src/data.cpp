#include "cvc/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cvc/errors.hpp"

namespace cvc {

namespace {

static_assert(std::endian::native == std::endian::little,
              "feature file writer assumes a little-endian host");

template <typename T>
void write_raw(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CorruptFile("feature file truncated: " + path);
    return v;
}

// splitmix64; decorrelates per-video streams from (seed, index)
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// 8 orthonormal vectors from seeded Gaussians via Gram-Schmidt.
std::vector<std::vector<double>> orthonormal_bases(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> bases;
    while (bases.size() < kNumLabels) {
        std::vector<double> v(dim);
        for (double& x : v) x = gauss(rng);
        for (const auto& b : bases) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += v[i] * b[i];
            for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue; // essentially never at dim >= 8
        for (double& x : v) x /= norm;
        bases.push_back(std::move(v));
    }
    return bases;
}

} // namespace

void save_features(const std::filesystem::path& path, const FeatureSequence& seq) {
    if (seq.frames.empty()) throw EmptyFeatureSequence("refusing to save an empty sequence");
    std::size_t dim = seq.frames.front().size();
    for (const auto& f : seq.frames) {
        if (f.rank() != 1 || f.size() != dim) {
            throw ShapeMismatch("all frames must share one dimension");
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open feature file for writing: " + path.string());
    out.write("CVCF", 4);
    write_raw<std::uint32_t>(out, 1);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(seq.frames.size()));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
    for (const auto& f : seq.frames) {
        for (std::size_t i = 0; i < dim; ++i) {
            write_raw<float>(out, static_cast<float>(f[i]));
        }
    }
    if (!out) throw IoFailure("failed writing feature file: " + path.string());
}

FeatureSequence load_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open feature file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CVCF", 4) != 0) {
        throw CorruptFile("bad feature file magic: " + path.string());
    }
    auto version = read_raw<std::uint32_t>(in, path.string());
    if (version != 1) throw CorruptFile("unsupported feature file version: " + path.string());
    auto n_frames = read_raw<std::uint32_t>(in, path.string());
    auto dim = read_raw<std::uint32_t>(in, path.string());
    if (n_frames == 0 || dim == 0) throw CorruptFile("empty feature file: " + path.string());
    FeatureSequence seq;
    seq.video_id = path.stem().string();
    seq.frames.reserve(n_frames);
    for (std::uint32_t t = 0; t < n_frames; ++t) {
        Tensor frame({dim});
        for (std::uint32_t i = 0; i < dim; ++i) {
            frame[i] = static_cast<double>(read_raw<float>(in, path.string()));
        }
        seq.frames.push_back(std::move(frame));
    }
    in.peek();
    if (!in.eof()) throw CorruptFile("trailing bytes in feature file: " + path.string());
    return seq;
}

Tensor whole_video_feature(const FeatureSequence& seq) {
    if (seq.frames.empty()) throw EmptyFeatureSequence("sequence has no frames");
    if (seq.frames.size() == 1) return seq.frames.front();
    std::size_t dim = seq.frames.front().size();
    Tensor mean({dim});
    for (const auto& f : seq.frames) {
        for (std::size_t i = 0; i < dim; ++i) mean[i] += f[i];
    }
    for (std::size_t i = 0; i < dim; ++i) mean[i] /= static_cast<double>(seq.frames.size());
    return mean;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open manifest for writing: " + path.string());
    out << "# video_id\tpath\tcaption\tsplit\n";
    for (const auto& r : manifest.records) {
        out << r.video_id << '\t' << r.feature_path << '\t' << r.caption.text() << '\t' << r.split
            << '\n';
    }
    if (!out) throw IoFailure("failed writing manifest: " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open manifest: " + path.string());
    DatasetManifest manifest;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 4) {
            throw CorruptFile("manifest line " + std::to_string(line_no) +
                              " does not have 4 tab-separated fields");
        }
        ManifestRecord rec;
        rec.video_id = fields[0];
        rec.feature_path = fields[1];
        rec.caption = caption_from_text(fields[2]);
        rec.split = fields[3];
        if (!seen_ids.insert(rec.video_id).second) {
            throw CorruptFile("duplicate video id in manifest: " + rec.video_id);
        }
        parse_caption(rec.caption); // throws NotALabel outside the 8-label set
        if (rec.split != "train" && rec.split != "val" && rec.split != "test" &&
            rec.split != "unused") {
            throw CorruptFile("unknown split tag in manifest: " + rec.split);
        }
        if (!std::filesystem::exists(path.parent_path() / rec.feature_path)) {
            throw CorruptFile("manifest references a missing file: " + rec.feature_path);
        }
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

void GeneratorConfig::validate() const {
    if (num_videos == 0) throw InvalidConfig("num_videos must be positive");
    if (frames_per_video == 0) throw InvalidConfig("frames_per_video must be positive");
    if (feature_dim < kNumLabels) {
        throw InvalidConfig("feature_dim must be >= 8 to fit the orthogonal class bases");
    }
    if (noise_scale < 0.0) throw InvalidConfig("noise_scale must be >= 0");
    if (run_fraction < 0.0 || run_fraction > 1.0) {
        throw InvalidConfig("run_fraction must be in [0,1]");
    }
}

std::vector<std::pair<FeatureSequence, AttributeTriple>> generate_corpus(
    const GeneratorConfig& config) {
    config.validate();
    std::mt19937_64 basis_rng(config.seed);
    auto bases = orthonormal_bases(config.feature_dim, basis_rng);

    std::vector<std::pair<FeatureSequence, AttributeTriple>> corpus;
    corpus.reserve(config.num_videos);
    for (std::size_t v = 0; v < config.num_videos; ++v) {
        std::mt19937_64 rng(mix_seed(config.seed, v));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        AttributeTriple triple;
        if (config.balanced) {
            triple = triple_from_class_id(v % kNumLabels);
        } else {
            triple.size = unit(rng) < 0.5 ? Size::Many : Size::Few;
            triple.movement = unit(rng) < config.run_fraction ? Movement::Run : Movement::Walk;
            triple.direction = unit(rng) < 0.5 ? Direction::In : Direction::Out;
        }

        const auto& basis = bases[class_id(triple)];
        double speed = triple.movement == Movement::Run ? 0.10 : 0.05;
        double drift = (triple.direction == Direction::In ? 1.0 : -1.0) * speed;

        std::normal_distribution<double> gauss(0.0, 1.0);
        FeatureSequence seq;
        std::ostringstream id;
        id << "vid";
        id.width(4);
        id.fill('0');
        id << v;
        seq.video_id = id.str();
        seq.frames.reserve(config.frames_per_video);
        for (std::size_t t = 0; t < config.frames_per_video; ++t) {
            Tensor frame({config.feature_dim});
            double scale = 3.0 + drift * static_cast<double>(t);
            for (std::size_t i = 0; i < config.feature_dim; ++i) {
                double x = scale * basis[i] + config.noise_scale * gauss(rng);
                // features live on disk as f32; quantize now so that
                // save/load round-trips are exact identities
                frame[i] = static_cast<double>(static_cast<float>(x));
            }
            seq.frames.push_back(std::move(frame));
        }
        corpus.emplace_back(std::move(seq), triple);
    }
    return corpus;
}

DatasetManifest generate_dataset(const GeneratorConfig& config,
                                 const std::filesystem::path& out_dir) {
    auto corpus = generate_corpus(config);
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "features", ec);
    if (ec) throw IoFailure("cannot create output directory: " + out_dir.string());

    DatasetManifest manifest;
    manifest.records.reserve(corpus.size());
    for (const auto& [seq, triple] : corpus) {
        ManifestRecord rec;
        rec.video_id = seq.video_id;
        rec.feature_path = "features/" + seq.video_id + ".cvcf";
        rec.caption = render_caption(triple);
        rec.split = "train";
        save_features(out_dir / rec.feature_path, seq);
        manifest.records.push_back(std::move(rec));
    }
    save_manifest(out_dir / "manifest.tsv", manifest);
    Vocabulary().save(out_dir / "vocab.txt");
    return manifest;
}

void split_dataset(DatasetManifest& manifest, std::array<std::size_t, 3> counts,
                   std::uint64_t seed) {
    std::size_t total = counts[0] + counts[1] + counts[2];
    if (total > manifest.records.size()) {
        throw InsufficientRecords("split counts sum to " + std::to_string(total) + " but only " +
                                  std::to_string(manifest.records.size()) + " records exist");
    }
    std::vector<std::size_t> order(manifest.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::string tag = "unused";
        if (k < counts[0]) {
            tag = "train";
        } else if (k < counts[0] + counts[1]) {
            tag = "val";
        } else if (k < total) {
            tag = "test";
        }
        manifest.records[order[k]].split = tag;
    }
}

} // namespace cvc
