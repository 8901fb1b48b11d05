#include "dve/heads.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dve {

FusedFeature fuse(std::span<const double> visual, std::span<const double> text) {
    FusedFeature out;
    out.visual_dim = visual.size();
    out.values.reserve(visual.size() + text.size());
    out.values.insert(out.values.end(), visual.begin(), visual.end());
    out.values.insert(out.values.end(), text.begin(), text.end());
    return out;
}

StrengthHead make_strength_head(std::size_t input_dim) {
    StrengthHead head;
    head.weights.assign(input_dim, 0.0);
    return head;
}

ClassificationHead make_classification_head(std::size_t input_dim) {
    ClassificationHead head;
    head.weights[0].assign(input_dim, 0.0);
    head.weights[1].assign(input_dim, 0.0);
    return head;
}

static void check_dim(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw DimensionMismatch(std::string(what) + ": head expects " + std::to_string(expected) +
                                " inputs, feature has " + std::to_string(got));
    }
}

double strength_score(const StrengthHead& head, const FusedFeature& feature) {
    check_dim(head.weights.size(), feature.size(), "strength_score");
    double s = head.bias;
    for (std::size_t i = 0; i < head.weights.size(); ++i) {
        s += head.weights[i] * feature.values[i];
    }
    return s;
}

std::array<double, 2> class_logits(const ClassificationHead& head, const FusedFeature& feature) {
    check_dim(head.weights[0].size(), feature.size(), "class_logits");
    std::array<double, 2> z = head.bias;
    for (int k = 0; k < 2; ++k) {
        const auto& w = head.weights[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            z[k] += w[i] * feature.values[i];
        }
    }
    return z;
}

std::array<double, 2> softmax2(const std::array<double, 2>& logits) noexcept {
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double sum = e0 + e1;
    return {e0 / sum, e1 / sum};
}

UpdateLabel label_from_logits(const std::array<double, 2>& logits) noexcept {
    return logits[1] > logits[0] ? UpdateLabel::strengthener : UpdateLabel::weakener;
}

Classification classify(const ClassificationHead& head, const FusedFeature& feature) {
    const auto z = class_logits(head, feature);
    return Classification{softmax2(z), label_from_logits(z)};
}

}  // namespace dve
