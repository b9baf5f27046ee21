#include "rsrag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "rsrag/error.hpp"

namespace rsrag {

namespace {

// N-grams keyed by their tokens joined with an unrenderable separator.
using Counts = std::unordered_map<std::string, int>;

Counts ngram_counts(const TokenSequence& tokens, std::size_t n) {
    Counts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            key.push_back('\x1f');
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

void require_references(const std::vector<TokenSequence>& references) {
    if (references.empty())
        throw Error(ErrorCode::EmptyReferences, "metric needs at least one reference");
}

}  // namespace

double bleu_n(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
              int n) {
    require_references(references);
    if (n < 1 || n > 4)
        throw Error(ErrorCode::ConfigInvalid, "bleu order must lie in 1..4");

    double log_sum = 0.0;
    for (int i = 1; i <= n; ++i) {
        Counts cand = ngram_counts(candidate, static_cast<std::size_t>(i));
        if (cand.empty()) return 0.0;

        std::vector<Counts> ref_counts;
        ref_counts.reserve(references.size());
        for (const auto& r : references)
            ref_counts.push_back(ngram_counts(r, static_cast<std::size_t>(i)));

        long clipped = 0;
        long total = 0;
        for (const auto& [gram, count] : cand) {
            int max_ref = 0;
            for (const auto& rc : ref_counts) {
                auto it = rc.find(gram);
                if (it != rc.end()) max_ref = std::max(max_ref, it->second);
            }
            clipped += std::min(count, max_ref);
            total += count;
        }
        if (clipped == 0) return 0.0;
        log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total)) / n;
    }

    const auto c_len = candidate.size();
    std::size_t r_len = references.front().size();
    for (const auto& r : references) {
        auto diff = [&](std::size_t len) {
            return len > c_len ? len - c_len : c_len - len;
        };
        if (diff(r.size()) < diff(r_len) || (diff(r.size()) == diff(r_len) && r.size() < r_len))
            r_len = r.size();
    }
    double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(r_len) /
                                                 static_cast<double>(c_len)));
    return bp * std::exp(log_sum);
}

double meteor(const TokenSequence& candidate, const std::vector<TokenSequence>& references) {
    require_references(references);

    double best = 0.0;
    for (const auto& ref : references) {
        if (candidate.empty() || ref.empty()) continue;
        std::vector<bool> used(ref.size(), false);
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t ci = 0; ci < candidate.size(); ++ci) {
            for (std::size_t ri = 0; ri < ref.size(); ++ri) {
                if (!used[ri] && ref[ri] == candidate[ci]) {
                    used[ri] = true;
                    pairs.emplace_back(ci, ri);
                    break;
                }
            }
        }
        const auto m = pairs.size();
        if (m == 0) continue;
        std::size_t chunks = 1;
        for (std::size_t k = 1; k < m; ++k)
            if (pairs[k].first != pairs[k - 1].first + 1 ||
                pairs[k].second != pairs[k - 1].second + 1)
                ++chunks;
        double p = static_cast<double>(m) / static_cast<double>(candidate.size());
        double r = static_cast<double>(m) / static_cast<double>(ref.size());
        double f = 10.0 * p * r / (r + 9.0 * p);
        double frag = static_cast<double>(chunks) / static_cast<double>(m);
        best = std::max(best, f * (1.0 - 0.5 * frag * frag * frag));
    }
    return best;
}

double rouge_l(const TokenSequence& candidate, const std::vector<TokenSequence>& references) {
    require_references(references);
    constexpr double beta2 = 1.2 * 1.2;

    double best = 0.0;
    for (const auto& ref : references) {
        if (candidate.empty() || ref.empty()) continue;
        std::vector<std::size_t> prev(ref.size() + 1, 0), curr(ref.size() + 1, 0);
        for (std::size_t i = 1; i <= candidate.size(); ++i) {
            for (std::size_t j = 1; j <= ref.size(); ++j) {
                curr[j] = candidate[i - 1] == ref[j - 1]
                              ? prev[j - 1] + 1
                              : std::max(prev[j], curr[j - 1]);
            }
            std::swap(prev, curr);
        }
        const auto lcs = prev[ref.size()];
        if (lcs == 0) continue;
        double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
        double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
        best = std::max(best, (1.0 + beta2) * p * r / (r + beta2 * p));
    }
    return best;
}

double cider(const std::vector<ScoredItem>& items) {
    if (items.empty()) throw Error(ErrorCode::EmptyCorpus, "cider needs at least one item");
    for (const auto& item : items) require_references(item.references);

    const auto n_items = static_cast<double>(items.size());
    double score_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        Counts df;
        for (const auto& item : items) {
            std::unordered_set<std::string> seen;
            for (const auto& ref : item.references)
                for (const auto& [gram, _] : ngram_counts(ref, n)) seen.insert(gram);
            for (const auto& gram : seen) ++df[gram];
        }

        for (const auto& item : items) {
            Counts g_c = ngram_counts(item.candidate, n);
            double total_c = 0.0;
            for (const auto& [_, c] : g_c) total_c += c;

            double sim_sum = 0.0;
            for (const auto& ref : item.references) {
                Counts g_r = ngram_counts(ref, n);
                double total_r = 0.0;
                for (const auto& [_, c] : g_r) total_r += c;

                double dot = 0.0, norm_c = 0.0, norm_r = 0.0;
                auto idf_of = [&](const std::string& gram) {
                    auto it = df.find(gram);
                    int d = it == df.end() ? 0 : it->second;
                    return std::log(n_items / std::max(d, 1));
                };
                auto weight = [](double count, double total, double idf) {
                    return total > 0.0 ? count / total * idf : 0.0;
                };
                for (const auto& [gram, c] : g_c) {
                    double idf = idf_of(gram);
                    double wc = weight(c, total_c, idf);
                    auto it = g_r.find(gram);
                    double wr = weight(it == g_r.end() ? 0.0 : it->second, total_r, idf);
                    dot += wc * wr;
                    norm_c += wc * wc;
                }
                for (const auto& [gram, c] : g_r) {
                    double wr = weight(c, total_r, idf_of(gram));
                    norm_r += wr * wr;
                }
                sim_sum += (norm_c == 0.0 || norm_r == 0.0)
                               ? 0.0
                               : dot / std::sqrt(norm_c * norm_r);
            }
            score_sum += sim_sum / static_cast<double>(item.references.size());
        }
    }
    return 10.0 * score_sum / (4.0 * n_items);
}

AccuracyReport classification_accuracy(const std::vector<std::string>& predictions,
                                       const std::vector<std::string>& golds) {
    if (predictions.size() != golds.size())
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(golds.size()) + " golds");
    AccuracyReport report;
    if (golds.empty()) {
        report.warning = true;
        return report;
    }

    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
    std::size_t hits = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        bool match = normalize_label(predictions[i]) == normalize_label(golds[i]);
        hits += match;
        auto& slot = per_class[golds[i]];
        slot.first += match;
        ++slot.second;
    }
    report.overall = static_cast<double>(hits) / static_cast<double>(golds.size());
    for (const auto& [label, counts] : per_class)
        report.per_class[label] =
            static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return report;
}

MetricReport score_corpus(const std::vector<ScoredItem>& items) {
    MetricReport out;
    out.n_examples = items.size();
    if (items.empty()) return out;

    for (const auto& item : items) {
        out.bleu1 += bleu_n(item.candidate, item.references, 1);
        out.bleu2 += bleu_n(item.candidate, item.references, 2);
        out.bleu3 += bleu_n(item.candidate, item.references, 3);
        out.bleu4 += bleu_n(item.candidate, item.references, 4);
        out.meteor += meteor(item.candidate, item.references);
        out.rouge_l += rouge_l(item.candidate, item.references);
    }
    const auto n = static_cast<double>(items.size());
    out.bleu1 /= n;
    out.bleu2 /= n;
    out.bleu3 /= n;
    out.bleu4 /= n;
    out.meteor /= n;
    out.rouge_l /= n;
    out.cider = cider(items);
    return out;
}

std::string format_metric(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

nlohmann::json metric_report_to_json(const MetricReport& report) {
    auto q = [](double v) { return std::stod(format_metric(v)); };
    return {{"bleu1", q(report.bleu1)},   {"bleu2", q(report.bleu2)},
            {"bleu3", q(report.bleu3)},   {"bleu4", q(report.bleu4)},
            {"meteor", q(report.meteor)}, {"rouge_l", q(report.rouge_l)},
            {"cider", q(report.cider)},   {"n_examples", report.n_examples},
            {"meteor_variant", "exact"}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.bleu1 = j.at("bleu1").get<double>();
    r.bleu2 = j.at("bleu2").get<double>();
    r.bleu3 = j.at("bleu3").get<double>();
    r.bleu4 = j.at("bleu4").get<double>();
    r.meteor = j.at("meteor").get<double>();
    r.rouge_l = j.at("rouge_l").get<double>();
    r.cider = j.at("cider").get<double>();
    r.n_examples = j.at("n_examples").get<std::size_t>();
    return r;
}

const std::vector<std::string>& metric_column_names() {
    static const std::vector<std::string> names = {"BLEU-1", "BLEU-2",  "BLEU-3", "BLEU-4",
                                                   "METEOR", "ROUGE-L", "CIDEr"};
    return names;
}

std::vector<double> metric_values(const MetricReport& report) {
    return {report.bleu1, report.bleu2,  report.bleu3, report.bleu4,
            report.meteor, report.rouge_l, report.cider};
}

}  // namespace rsrag
