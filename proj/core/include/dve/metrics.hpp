// Reference-based generation metrics and the external-metric adapter.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dve/errors.hpp"
#include "dve/types.hpp"

namespace dve {

double accuracy(std::span<const UpdateLabel> predictions, std::span<const UpdateLabel> gold);

// Lowercased, whitespace-split, punctuation peeled off as separate tokens.
std::vector<std::string> tokenize_for_overlap(std::string_view text);

// LCS-based F1; multi-reference scores take the best reference.
double rouge_l(const std::string& candidate, std::span<const std::string> references);

// Geometric mean of clipped 1..4-gram precisions times the brevity penalty.
// Add-one smoothing on n >= 2 counts kicks in when a clipped count is zero.
double bleu4(const std::string& candidate, std::span<const std::string> references);

std::size_t longest_common_subsequence(std::span<const std::string> a,
                                       std::span<const std::string> b);

// External embedding-similarity scorers (BERTScore/CLIPScore style) plug in
// here; the adapter performs no math itself.
using ScorerFn = std::function<double(const std::string& candidate,
                                      std::span<const std::string> references,
                                      const ImagePremise* image)>;

class MetricRegistry {
public:
    // Registers the built-in reference metrics ("rouge-l", "bleu-4").
    static MetricRegistry with_builtins();

    void register_metric(const std::string& name, ScorerFn scorer);
    bool contains(const std::string& name) const;
    std::vector<std::string> names() const;

    // Wraps scorer exceptions into ScorerFailure carrying the metric name.
    double score(const std::string& name, const std::string& candidate,
                 std::span<const std::string> references,
                 const ImagePremise* image = nullptr) const;

private:
    std::map<std::string, ScorerFn> scorers_;
};

// One evaluated generation output.
struct GenerationRecord {
    std::string model;
    Goal goal = Goal::strengthen;
    std::string candidate;
    std::vector<std::string> references;
    std::optional<ImagePremise> image;
};

// One (model, goal, metric) aggregate row, mirroring the evaluation tables.
struct MetricRow {
    std::string model;
    Goal goal = Goal::strengthen;
    std::string metric;
    double mean = 0.0;
    std::size_t count = 0;
};

std::vector<MetricRow> evaluate_generations(const MetricRegistry& registry,
                                            std::span<const std::string> metric_names,
                                            std::span<const GenerationRecord> records);

}  // namespace dve
