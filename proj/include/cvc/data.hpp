#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cvc/grammar.hpp"
#include "cvc/tensor.hpp"

namespace cvc {

// Ordered per-frame feature vectors for one video.
struct FeatureSequence {
    std::string video_id;
    std::vector<Tensor> frames; // n rank-1 tensors, all the same dimension
};

// Feature file:
//   magic "CVCF" | u32 version (1) | u32 n_frames | u32 feature_dim |
//   n_frames * feature_dim little-endian f32
void save_features(const std::filesystem::path& path, const FeatureSequence& seq);
FeatureSequence load_features(const std::filesystem::path& path);

// Whole-video feature: the file content itself when it holds a single
// frame, otherwise the mean over frames.
Tensor whole_video_feature(const FeatureSequence& seq);

struct ManifestRecord {
    std::string video_id;
    std::string feature_path; // relative to the manifest's directory
    Caption caption;
    std::string split; // train | val | test | unused
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
};

// Manifest: UTF-8, tab-separated, one record per line:
//   video_id <TAB> path <TAB> caption <TAB> split
// '#' comment lines ignored. Loading validates unique ids, that every
// caption is one of the 8 labels and that every referenced file exists.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct GeneratorConfig {
    std::uint64_t seed = 0;
    std::size_t num_videos = 8;
    std::size_t frames_per_video = 16;
    std::size_t feature_dim = 64;  // desk scale; 2048/4096 for paper scale
    double noise_scale = 0.1;      // sigma of the per-coordinate Gaussian
    double run_fraction = 0.21;    // P(movement = Run) when not balanced
    bool balanced = false;         // round-robin over the 8 labels

    void validate() const; // throws InvalidConfig
};

// Synthetic attribute-conditioned corpus. Frame t of a video with triple T:
//   x_t = B(T) + t * D(T) + eps_t
// where the B are 8 orthogonal unit vectors scaled by 3.0, D drifts along
// the video's own basis axis with sign = direction (In grows, Out shrinks)
// and Run moving twice as fast as Walk, and eps ~ N(0, sigma^2) iid.
// Per-video RNG streams are derived from (seed, index), so the corpus is a
// pure function of the config.
std::vector<std::pair<FeatureSequence, AttributeTriple>> generate_corpus(
    const GeneratorConfig& config);

// Writes feature files under <out_dir>/features/ plus manifest.tsv and
// vocab.txt; returns the manifest (all records tagged "train").
DatasetManifest generate_dataset(const GeneratorConfig& config,
                                 const std::filesystem::path& out_dir);

// Seeded shuffle, then the first counts[0] records become train, the next
// counts[1] val, the next counts[2] test; any remainder is tagged unused.
// Throws InsufficientRecords when counts sum past the record count.
void split_dataset(DatasetManifest& manifest, std::array<std::size_t, 3> counts,
                   std::uint64_t seed);

} // namespace cvc
