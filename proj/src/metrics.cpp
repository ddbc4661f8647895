#include "cvc/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cvc/errors.hpp"

namespace cvc {

Sentence tokenize(const std::string& text) {
    std::string lowered = text;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    Sentence tokens;
    std::istringstream in(lowered);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::map<NGram, std::size_t> ngram_counts(const Sentence& sentence, std::size_t order) {
    std::map<NGram, std::size_t> counts;
    if (order == 0 || sentence.size() < order) return counts;
    for (std::size_t i = 0; i + order <= sentence.size(); ++i) {
        NGram gram(sentence.begin() + static_cast<std::ptrdiff_t>(i),
                   sentence.begin() + static_cast<std::ptrdiff_t>(i + order));
        ++counts[gram];
    }
    return counts;
}

namespace {

void check_corpus(const std::vector<Sentence>& candidates,
                  const std::vector<std::vector<Sentence>>& references) {
    if (candidates.empty()) throw EmptyCorpus("metric over an empty corpus");
    if (candidates.size() != references.size()) {
        throw LengthMismatch("candidate and reference lists differ in length");
    }
    for (const auto& refs : references) {
        if (refs.empty()) throw EmptyCorpus("a candidate has no references");
    }
}

} // namespace

void BleuConfig::validate() const {
    if (max_order == 0) throw InvalidConfig("BLEU max_order must be >= 1");
    if (weights.empty()) return;
    if (weights.size() != max_order) {
        throw InvalidConfig("BLEU weights must have one entry per order");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw InvalidConfig("BLEU weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("BLEU weights must sum to 1");
}

double modified_precision(const std::vector<Sentence>& candidates,
                          const std::vector<std::vector<Sentence>>& references,
                          std::size_t order) {
    if (order == 0) throw InvalidConfig("n-gram order must be >= 1");
    check_corpus(candidates, references);
    std::size_t clipped_matches = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto cand_counts = ngram_counts(candidates[i], order);
        std::map<NGram, std::size_t> max_ref;
        for (const auto& ref : references[i]) {
            for (const auto& [gram, count] : ngram_counts(ref, order)) {
                max_ref[gram] = std::max(max_ref[gram], count);
            }
        }
        for (const auto& [gram, count] : cand_counts) {
            total += count;
            auto it = max_ref.find(gram);
            if (it != max_ref.end()) clipped_matches += std::min(count, it->second);
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(clipped_matches) / static_cast<double>(total);
}

double brevity_penalty(std::size_t candidate_len, std::size_t reference_len) {
    if (candidate_len == 0) throw ZeroLengthCandidate("brevity penalty of a length-0 candidate");
    if (candidate_len > reference_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(reference_len) / static_cast<double>(candidate_len));
}

double bleu(const std::vector<Sentence>& candidates,
            const std::vector<std::vector<Sentence>>& references, const BleuConfig& config) {
    config.validate();
    check_corpus(candidates, references);

    std::size_t c_total = 0;
    std::size_t r_total = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        std::size_t c = candidates[i].size();
        c_total += c;
        // effective reference length: closest to the candidate, shorter on ties
        std::size_t best = references[i].front().size();
        for (const auto& ref : references[i]) {
            std::size_t r = ref.size();
            std::size_t d_new = r > c ? r - c : c - r;
            std::size_t d_old = best > c ? best - c : c - best;
            if (d_new < d_old || (d_new == d_old && r < best)) best = r;
        }
        r_total += best;
    }

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= config.max_order; ++n) {
        double w = config.weights.empty() ? 1.0 / static_cast<double>(config.max_order)
                                          : config.weights[n - 1];
        double p = modified_precision(candidates, references, n);
        if (p == 0.0) {
            if (w > 0.0) return 0.0;
            continue;
        }
        log_sum += w * std::log(p);
    }
    return brevity_penalty(c_total, r_total) * std::exp(log_sum);
}

namespace {

// Exhaustive search over maximum alignments for the one with the fewest
// chunks. Candidate positions are visited in order; each either maps to an
// unused reference position with the same surface form or stays unmatched
// when the maximum match count is still reachable. Sentences here are a
// handful of tokens, so the space is tiny; a node budget guards the
// pathological case and keeps the first completed alignment.
struct AlignmentSearch {
    const Sentence& cand;
    const Sentence& ref;
    std::size_t target_matches;
    std::vector<std::ptrdiff_t> ref_of; // per candidate position, -1 = unmatched
    std::vector<bool> ref_used;
    std::size_t best_chunks = std::numeric_limits<std::size_t>::max();
    std::size_t budget = 1000000;

    std::size_t count_chunks() const {
        std::size_t chunks = 0;
        std::ptrdiff_t prev_pos = -2;
        std::ptrdiff_t prev_ref = -2;
        for (std::size_t i = 0; i < ref_of.size(); ++i) {
            if (ref_of[i] < 0) continue;
            bool contiguous = static_cast<std::ptrdiff_t>(i) == prev_pos + 1 &&
                              ref_of[i] == prev_ref + 1;
            if (!contiguous) ++chunks;
            prev_pos = static_cast<std::ptrdiff_t>(i);
            prev_ref = ref_of[i];
        }
        return chunks;
    }

    void search(std::size_t pos, std::size_t matched, std::size_t skippable) {
        if (budget == 0) return;
        --budget;
        if (pos == cand.size()) {
            if (matched == target_matches) best_chunks = std::min(best_chunks, count_chunks());
            return;
        }
        for (std::size_t j = 0; j < ref.size(); ++j) {
            if (!ref_used[j] && ref[j] == cand[pos]) {
                ref_used[j] = true;
                ref_of[pos] = static_cast<std::ptrdiff_t>(j);
                search(pos + 1, matched + 1, skippable);
                ref_of[pos] = -1;
                ref_used[j] = false;
            }
        }
        if (skippable > 0) search(pos + 1, matched, skippable - 1);
    }
};

std::size_t min_chunks(const Sentence& cand, const Sentence& ref, std::size_t target_matches) {
    AlignmentSearch search{cand, ref, target_matches,
                           std::vector<std::ptrdiff_t>(cand.size(), -1),
                           std::vector<bool>(ref.size(), false)};
    // positions allowed to stay unmatched without losing maximality
    search.search(0, 0, cand.size() - target_matches);
    return search.best_chunks;
}

} // namespace

double meteor(const Sentence& candidate, const Sentence& reference, const MeteorConfig& config) {
    if (candidate.empty() || reference.empty()) return 0.0;

    // maximum match count is fixed by per-type counts
    auto cand_counts = ngram_counts(candidate, 1);
    auto ref_counts = ngram_counts(reference, 1);
    std::size_t m = 0;
    for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) m += std::min(count, it->second);
    }
    if (m == 0) return 0.0;

    std::size_t ch = min_chunks(candidate, reference, m);
    double precision = static_cast<double>(m) / static_cast<double>(candidate.size());
    double recall = static_cast<double>(m) / static_cast<double>(reference.size());
    double w = config.recall_weight;
    double e_mean = (1.0 + w) * precision * recall / (recall + w * precision);
    double pen = config.gamma *
                 std::pow(static_cast<double>(ch) / static_cast<double>(m), config.beta);
    return (1.0 - pen) * e_mean;
}

double rouge_l(const Sentence& candidate, const Sentence& reference, double b) {
    if (candidate.empty() || reference.empty()) return 0.0;
    std::size_t n = candidate.size(), m = reference.size();
    std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            if (candidate[i - 1] == reference[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    std::size_t lcs = prev[m];
    if (lcs == 0) return 0.0;
    double p = static_cast<double>(lcs) / static_cast<double>(n);
    double r = static_cast<double>(lcs) / static_cast<double>(m);
    return (1.0 + b * b) * p * r / (r + b * b * p);
}

namespace {

// TF-IDF vector for one sentence at one order; df maps grams to the number
// of videos whose references contain them.
std::map<NGram, double> tfidf_vector(const Sentence& s, std::size_t order,
                                     const std::map<NGram, std::size_t>& df,
                                     std::size_t num_videos) {
    std::map<NGram, double> vec;
    auto counts = ngram_counts(s, order);
    std::size_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    if (total == 0) return vec;
    for (const auto& [gram, c] : counts) {
        auto it = df.find(gram);
        std::size_t d = it == df.end() ? 1 : std::max<std::size_t>(1, it->second);
        double idf = std::log(static_cast<double>(num_videos) / static_cast<double>(d));
        vec[gram] = (static_cast<double>(c) / static_cast<double>(total)) * idf;
    }
    return vec;
}

double cosine(const std::map<NGram, double>& a, const std::map<NGram, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [gram, v] : a) {
        na += v * v;
        auto it = b.find(gram);
        if (it != b.end()) dot += v * it->second;
    }
    for (const auto& [_, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

double cider(const std::vector<Sentence>& candidates,
             const std::vector<std::vector<Sentence>>& references, const CiderConfig& config) {
    if (config.max_order == 0) throw InvalidConfig("CIDEr max_order must be >= 1");
    check_corpus(candidates, references);
    if (candidates.size() < 2) {
        throw DegenerateCorpus("CIDEr needs at least 2 videos for a defined IDF");
    }

    double order_sum = 0.0;
    for (std::size_t n = 1; n <= config.max_order; ++n) {
        // document frequency: one document per video's reference set
        std::map<NGram, std::size_t> df;
        for (const auto& refs : references) {
            std::map<NGram, std::size_t> seen;
            for (const auto& ref : refs) {
                for (const auto& [gram, _] : ngram_counts(ref, n)) seen[gram] = 1;
            }
            for (const auto& [gram, _] : seen) ++df[gram];
        }
        double corpus_sum = 0.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            auto cand_vec = tfidf_vector(candidates[i], n, df, candidates.size());
            double ref_sum = 0.0;
            for (const auto& ref : references[i]) {
                ref_sum += cosine(cand_vec, tfidf_vector(ref, n, df, candidates.size()));
            }
            corpus_sum += ref_sum / static_cast<double>(references[i].size());
        }
        order_sum += corpus_sum / static_cast<double>(candidates.size());
    }
    return order_sum / static_cast<double>(config.max_order);
}

EvalReport build_report(const std::vector<Sentence>& predictions,
                        const std::vector<Sentence>& references) {
    if (predictions.size() != references.size()) {
        throw LengthMismatch("prediction and reference lists differ in length");
    }
    if (predictions.empty()) throw EmptyCorpus("report over an empty corpus");

    std::vector<std::vector<Sentence>> ref_sets;
    ref_sets.reserve(references.size());
    for (const auto& r : references) ref_sets.push_back({r});

    EvalReport report;
    for (std::size_t n = 1; n <= 4; ++n) {
        BleuConfig cfg;
        cfg.max_order = n;
        report.bleu_pct[n - 1] = 100.0 * bleu(predictions, ref_sets, cfg);
    }
    report.cider_pct = 100.0 * cider(predictions, ref_sets);
    double meteor_sum = 0.0, rouge_sum = 0.0;
    std::size_t exact = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        meteor_sum += meteor(predictions[i], references[i]);
        rouge_sum += rouge_l(predictions[i], references[i]);
        if (predictions[i] == references[i]) ++exact;
    }
    report.meteor_pct = 100.0 * meteor_sum / static_cast<double>(predictions.size());
    report.rouge_l_pct = 100.0 * rouge_sum / static_cast<double>(predictions.size());
    report.accuracy = static_cast<double>(exact) / static_cast<double>(predictions.size());
    return report;
}

std::string render_table(const EvalReport& r) {
    char buf[256];
    std::string out;
    out += "Metric    BLEU-1(%)  BLEU-2(%)  BLEU-3(%)  BLEU-4(%)  CIDEr(%)  METEOR(%)  "
           "ROUGE_L(%)  Accuracy\n";
    std::snprintf(buf, sizeof(buf),
                  "result    %9.2f  %9.2f  %9.2f  %9.2f  %8.2f  %9.2f  %10.2f  %8.3f\n",
                  r.bleu_pct[0], r.bleu_pct[1], r.bleu_pct[2], r.bleu_pct[3], r.cider_pct,
                  r.meteor_pct, r.rouge_l_pct, r.accuracy);
    out += buf;
    return out;
}

std::string render_key_values(const EvalReport& r) {
    char buf[64];
    std::string out;
    auto emit = [&](const char* key, double value) {
        std::snprintf(buf, sizeof(buf), "%s=%.10g\n", key, value);
        out += buf;
    };
    emit("bleu1", r.bleu_pct[0]);
    emit("bleu2", r.bleu_pct[1]);
    emit("bleu3", r.bleu_pct[2]);
    emit("bleu4", r.bleu_pct[3]);
    emit("cider", r.cider_pct);
    emit("meteor", r.meteor_pct);
    emit("rouge_l", r.rouge_l_pct);
    emit("accuracy", r.accuracy);
    return out;
}

} // namespace cvc
