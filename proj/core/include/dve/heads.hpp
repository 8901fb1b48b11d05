// Feature fusion and the two evaluator heads (entailment strength, update class).
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dve/errors.hpp"
#include "dve/types.hpp"

namespace dve {

// Concatenated multimodal feature; the first visual_dim entries are the visual
// embedding, the remainder the text-pair embedding.
struct FusedFeature {
    std::vector<double> values;
    std::size_t visual_dim = 0;

    std::size_t size() const noexcept { return values.size(); }
};

FusedFeature fuse(std::span<const double> visual, std::span<const double> text);

// Linear strength head: s = <w, m> + b. Unbounded score; higher means the
// update makes the hypothesis more likely.
struct StrengthHead {
    std::vector<double> weights;
    double bias = 0.0;
};

// Two-logit classification head; row 0 scores weakener, row 1 strengthener.
struct ClassificationHead {
    std::array<std::vector<double>, 2> weights;
    std::array<double, 2> bias{0.0, 0.0};
};

StrengthHead make_strength_head(std::size_t input_dim);
ClassificationHead make_classification_head(std::size_t input_dim);

double strength_score(const StrengthHead& head, const FusedFeature& feature);

std::array<double, 2> class_logits(const ClassificationHead& head, const FusedFeature& feature);

// Joint normalization of the two logits; entries in (0,1), sum 1.
std::array<double, 2> softmax2(const std::array<double, 2>& logits) noexcept;

struct Classification {
    std::array<double, 2> probabilities;  // index 0 weakener, index 1 strengthener
    UpdateLabel label;
};

Classification classify(const ClassificationHead& head, const FusedFeature& feature);

UpdateLabel label_from_logits(const std::array<double, 2>& logits) noexcept;

}  // namespace dve
