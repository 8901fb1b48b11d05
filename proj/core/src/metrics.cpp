#include "dve/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <tuple>

namespace dve {

double accuracy(std::span<const UpdateLabel> predictions, std::span<const UpdateLabel> gold) {
    if (predictions.size() != gold.size()) {
        throw LengthMismatch("accuracy: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(gold.size()) + " gold labels");
    }
    if (predictions.empty()) {
        throw EmptyInput("accuracy: empty input");
    }
    std::size_t matches = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == gold[i]) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(predictions.size());
}

std::vector<std::string> tokenize_for_overlap(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            tokens.emplace_back(1, static_cast<char>(c));
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return tokens;
}

std::size_t longest_common_subsequence(std::span<const std::string> a,
                                       std::span<const std::string> b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
        }
        std::swap(prev, row);
    }
    return prev[b.size()];
}

double rouge_l(const std::string& candidate, std::span<const std::string> references) {
    if (references.empty()) {
        throw EmptyInput("rouge_l: empty reference set");
    }
    const auto cand = tokenize_for_overlap(candidate);
    if (cand.empty()) {
        throw EmptyInput("rouge_l: candidate has no tokens");
    }
    double best = 0.0;
    for (const auto& reference : references) {
        const auto ref = tokenize_for_overlap(reference);
        if (ref.empty()) continue;
        const double lcs = static_cast<double>(longest_common_subsequence(cand, ref));
        if (lcs == 0.0) continue;
        const double precision = lcs / static_cast<double>(cand.size());
        const double recall = lcs / static_cast<double>(ref.size());
        best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    return best;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

}  // namespace

double bleu4(const std::string& candidate, std::span<const std::string> references) {
    if (references.empty()) {
        throw EmptyInput("bleu4: empty reference set");
    }
    const auto cand = tokenize_for_overlap(candidate);
    if (cand.empty()) return 0.0;

    std::vector<std::vector<std::string>> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(tokenize_for_overlap(r));

    // Closest reference length; ties resolved toward the shorter reference.
    std::size_t ref_len = refs.front().size();
    for (const auto& r : refs) {
        const auto diff = [&](std::size_t len) {
            return len > cand.size() ? len - cand.size() : cand.size() - len;
        };
        if (std::tuple(diff(r.size()), r.size()) < std::tuple(diff(ref_len), ref_len)) {
            ref_len = r.size();
        }
    }

    double log_precision_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto cand_counts = count_ngrams(cand, n);
        std::size_t total = 0;
        std::size_t clipped = 0;
        for (const auto& [gram, count] : cand_counts) {
            total += count;
            std::size_t best_ref = 0;
            for (const auto& r : refs) {
                const auto ref_counts = count_ngrams(r, n);
                auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) best_ref = std::max(best_ref, it->second);
            }
            clipped += std::min(count, best_ref);
        }
        if (total == 0) {
            // Candidate shorter than n tokens; nothing to score at this order.
            return 0.0;
        }
        double p;
        if (clipped == 0) {
            if (n == 1) return 0.0;  // no unigram overlap, no smoothing at order 1
            p = 1.0 / static_cast<double>(total + 1);
        } else {
            p = static_cast<double>(clipped) / static_cast<double>(total);
        }
        log_precision_sum += std::log(p);
    }

    const double brevity =
        cand.size() >= ref_len
            ? 1.0
            : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand.size()));
    return brevity * std::exp(log_precision_sum / 4.0);
}

MetricRegistry MetricRegistry::with_builtins() {
    MetricRegistry registry;
    registry.register_metric("rouge-l", [](const std::string& cand,
                                           std::span<const std::string> refs,
                                           const ImagePremise*) { return rouge_l(cand, refs); });
    registry.register_metric("bleu-4", [](const std::string& cand,
                                          std::span<const std::string> refs,
                                          const ImagePremise*) { return bleu4(cand, refs); });
    return registry;
}

void MetricRegistry::register_metric(const std::string& name, ScorerFn scorer) {
    if (!scorer) {
        throw ConfigError("register_metric: null scorer for '" + name + "'");
    }
    scorers_[name] = std::move(scorer);
}

bool MetricRegistry::contains(const std::string& name) const {
    return scorers_.count(name) != 0;
}

std::vector<std::string> MetricRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(scorers_.size());
    for (const auto& [name, fn] : scorers_) out.push_back(name);
    return out;
}

double MetricRegistry::score(const std::string& name, const std::string& candidate,
                             std::span<const std::string> references,
                             const ImagePremise* image) const {
    auto it = scorers_.find(name);
    if (it == scorers_.end()) {
        throw ScorerFailure("unknown metric '" + name + "'");
    }
    double value;
    try {
        value = it->second(candidate, references, image);
    } catch (const std::exception& e) {
        throw ScorerFailure(name + ": " + e.what());
    }
    if (!std::isfinite(value)) {
        throw ScorerFailure(name + ": scorer returned a non-finite value");
    }
    return value;
}

std::vector<MetricRow> evaluate_generations(const MetricRegistry& registry,
                                            std::span<const std::string> metric_names,
                                            std::span<const GenerationRecord> records) {
    struct Sum {
        double total = 0.0;
        std::size_t count = 0;
    };
    std::map<std::tuple<std::string, Goal, std::string>, Sum> sums;
    for (const auto& record : records) {
        for (const auto& metric : metric_names) {
            const double value =
                registry.score(metric, record.candidate, record.references,
                               record.image.has_value() ? &*record.image : nullptr);
            auto& sum = sums[{record.model, record.goal, metric}];
            sum.total += value;
            ++sum.count;
        }
    }
    std::vector<MetricRow> rows;
    rows.reserve(sums.size());
    for (const auto& [key, sum] : sums) {
        rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                        sum.total / static_cast<double>(sum.count), sum.count});
    }
    return rows;
}

}  // namespace dve
