#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace cvc {

// Metrics operate on tokenized sentences. The grammar guarantees clean
// input, so tokenization is lowercase + whitespace split.
using Sentence = std::vector<std::string>;
using NGram = std::vector<std::string>;

Sentence tokenize(const std::string& text);

// Occurrence counts of the order-n grams of a sentence. A sentence of
// length L has max(0, L-n+1) of them.
std::map<NGram, std::size_t> ngram_counts(const Sentence& sentence, std::size_t order);

struct BleuConfig {
    std::size_t max_order = 4;
    std::vector<double> weights; // empty -> uniform 1/max_order

    void validate() const; // throws InvalidConfig
};

// Corpus-level modified n-gram precision: candidate counts clipped at the
// per-gram maximum over that candidate's references, summed over the
// corpus, divided by the total candidate n-gram count.
double modified_precision(const std::vector<Sentence>& candidates,
                          const std::vector<std::vector<Sentence>>& references,
                          std::size_t order);

// BP = 1 when c > r, else exp(1 - r/c).
double brevity_penalty(std::size_t candidate_len, std::size_t reference_len);

// BP * exp(sum_n w_n log p_n); any p_n = 0 makes the score 0 (no
// smoothing). r is the per-candidate closest reference length (ties go to
// the shorter), summed over the corpus.
double bleu(const std::vector<Sentence>& candidates,
            const std::vector<std::vector<Sentence>>& references, const BleuConfig& config = {});

struct MeteorConfig {
    double recall_weight = 9.0; // harmonic mean weighted 9:1 toward recall
    double gamma = 0.5;
    double beta = 3.0;
};

// Exact-surface unigram alignment maximizing matches then minimizing
// chunks; E_mean = (1+w)PR / (R + wP); Pen = gamma * (ch/m)^beta;
// score = (1 - Pen) * E_mean. No matches -> 0.
double meteor(const Sentence& candidate, const Sentence& reference,
              const MeteorConfig& config = {});

// LCS F-measure: P = LCS/|c|, R = LCS/|r|, F = (1+b^2)PR / (R + b^2 P).
double rouge_l(const Sentence& candidate, const Sentence& reference, double b = 1.2);

struct CiderConfig {
    std::size_t max_order = 4;
};

// Plain TF-IDF consensus: per order n, g_n(s) has one coordinate per
// n-gram, value = (count / total order-n grams of s) * log(N / max(1, df))
// with df = number of videos whose reference set contains the gram.
// CIDEr_n = mean over references of cosine(g_n(candidate), g_n(ref));
// final score = mean over n = 1..max_order. Zero-norm vectors give
// similarity 0. Throws DegenerateCorpus for fewer than 2 videos.
double cider(const std::vector<Sentence>& candidates,
             const std::vector<std::vector<Sentence>>& references,
             const CiderConfig& config = {});

// Table-1-shaped corpus report. Metric columns are percentages; accuracy
// is the raw exact-match fraction.
struct EvalReport {
    std::array<double, 4> bleu_pct{}; // cumulative BLEU-1..4
    double cider_pct = 0.0;
    double meteor_pct = 0.0;
    double rouge_l_pct = 0.0;
    double accuracy = 0.0;
};

EvalReport build_report(const std::vector<Sentence>& predictions,
                        const std::vector<Sentence>& references);

std::string render_table(const EvalReport& report);
std::string render_key_values(const EvalReport& report);

} // namespace cvc
