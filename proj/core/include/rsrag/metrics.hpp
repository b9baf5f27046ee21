#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsrag/tokenizer.hpp"

namespace rsrag {

struct ScoredItem {
    TokenSequence candidate;
    std::vector<TokenSequence> references;
};

/// Cumulative BLEU-n, uniform 1/n weights, clipped modified precisions, no
/// smoothing; brevity penalty uses the closest reference length (ties toward
/// the shorter one). Errors: EmptyReferences; ConfigInvalid (n outside 1..4).
double bleu_n(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
              int n);

/// Exact-match variant: greedy left-to-right unigram alignment, F = 10PR /
/// (R + 9P), fragmentation penalty 0.5*(chunks/m)^3, max over references.
/// Errors: EmptyReferences.
double meteor(const TokenSequence& candidate, const std::vector<TokenSequence>& references);

/// LCS F-measure with beta = 1.2, max over references. Errors: EmptyReferences.
double rouge_l(const TokenSequence& candidate, const std::vector<TokenSequence>& references);

/// Corpus-level tf-idf n-gram consensus (n = 1..4), idf = ln(N/df) with df
/// floored at 1, zero-vector cosines scored 0, scaled by 10.
/// Errors: EmptyCorpus.
double cider(const std::vector<ScoredItem>& items);

struct AccuracyReport {
    double overall = 0.0;
    std::map<std::string, double> per_class;  // keyed by gold label
    bool warning = false;                     // empty input scored 0 by convention
};

/// Labels are normalized (tokenize + re-join) before comparison.
/// Errors: LengthMismatch.
AccuracyReport classification_accuracy(const std::vector<std::string>& predictions,
                                       const std::vector<std::string>& golds);

struct MetricReport {
    double bleu1 = 0.0;
    double bleu2 = 0.0;
    double bleu3 = 0.0;
    double bleu4 = 0.0;
    double meteor = 0.0;
    double rouge_l = 0.0;
    double cider = 0.0;
    std::size_t n_examples = 0;
};

/// BLEU/METEOR/ROUGE-L as means of per-item scores; CIDEr at corpus level.
/// An empty corpus yields an all-zero report (callers flag it).
MetricReport score_corpus(const std::vector<ScoredItem>& items);

/// Fixed 6-decimal formatting used for every serialized metric value.
std::string format_metric(double value);

/// Flat name -> value map (values quantized to 6 decimals so serialization is
/// bit-stable). Round-trips through metric_report_from_json.
nlohmann::json metric_report_to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& j);

/// Column order of every metrics table: BLEU-1..4, METEOR, ROUGE-L, CIDEr.
const std::vector<std::string>& metric_column_names();
std::vector<double> metric_values(const MetricReport& report);

}  // namespace rsrag
