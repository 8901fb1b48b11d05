#include "dve/losses.hpp"

#include <cmath>
#include <string>

namespace dve {

double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double pairwise_contrastive_loss(std::span<const double> update_scores,
                                 std::span<const double> caption_scores,
                                 std::span<const int> signs) {
    if (update_scores.size() != caption_scores.size() || update_scores.size() != signs.size()) {
        throw LengthMismatch("pairwise_contrastive_loss: got " +
                             std::to_string(update_scores.size()) + " update scores, " +
                             std::to_string(caption_scores.size()) + " caption scores, " +
                             std::to_string(signs.size()) + " signs");
    }
    if (update_scores.empty()) {
        throw EmptyInput("pairwise_contrastive_loss: empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < update_scores.size(); ++i) {
        if (signs[i] != -1 && signs[i] != +1) {
            throw Error("pairwise_contrastive_loss: sign must be -1 or +1, got " +
                        std::to_string(signs[i]));
        }
        // -log sigmoid(d * l) == softplus(-d * l)
        const double margin = update_scores[i] - caption_scores[i];
        total += softplus(-margin * signs[i]);
    }
    return total / static_cast<double>(update_scores.size());
}

double categorical_loss(std::span<const std::array<double, 2>> predicted,
                        std::span<const std::array<double, 2>> onehot) {
    if (predicted.size() != onehot.size()) {
        throw LengthMismatch("categorical_loss: " + std::to_string(predicted.size()) +
                             " predictions vs " + std::to_string(onehot.size()) + " targets");
    }
    if (predicted.empty()) {
        throw EmptyInput("categorical_loss: empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        for (int j = 0; j < 2; ++j) {
            if (!std::isfinite(predicted[i][j])) {
                throw Error("categorical_loss: non-finite probability at row " + std::to_string(i));
            }
            if (onehot[i][j] != 0.0) {
                total -= onehot[i][j] * std::log(std::max(predicted[i][j], kProbabilityClamp));
            }
        }
    }
    return total / static_cast<double>(predicted.size());
}

double combined_loss(double pairwise, double categorical, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw AlphaOutOfRange("combined_loss: alpha must lie in [0, 1], got " +
                              std::to_string(alpha));
    }
    return (1.0 - alpha) * pairwise + alpha * categorical;
}

ClassifierLoss classifier_loss_from_string(std::string_view s) {
    if (s == "softmax") return ClassifierLoss::softmax_ce;
    if (s == "sigmoid") return ClassifierLoss::sigmoid_bce;
    throw ConfigError("unknown classifier loss: '" + std::string(s) + "' (want softmax|sigmoid)");
}

std::string_view to_string(ClassifierLoss mode) noexcept {
    return mode == ClassifierLoss::softmax_ce ? "softmax" : "sigmoid";
}

BatchLoss batch_loss(const StrengthHead& strength, const ClassificationHead& classifier,
                     std::span<const TrainExample> batch, double alpha, ClassifierLoss mode,
                     HeadGradients* gradients) {
    if (batch.empty()) {
        throw EmptyInput("batch_loss: empty batch");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw AlphaOutOfRange("batch_loss: alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const std::size_t dim = strength.weights.size();

    if (gradients != nullptr) {
        gradients->strength_w.assign(dim, 0.0);
        gradients->strength_b = 0.0;
        gradients->class_w[0].assign(dim, 0.0);
        gradients->class_w[1].assign(dim, 0.0);
        gradients->class_b = {0.0, 0.0};
    }

    double pairwise_total = 0.0;
    double categorical_total = 0.0;
    for (const TrainExample& ex : batch) {
        const int sign = label_sign(ex.label);
        const double s_u = strength_score(strength, ex.update_feature);
        const double s_c = strength_score(strength, ex.caption_feature);
        const double margin = s_u - s_c;
        pairwise_total += softplus(-margin * sign);

        const auto z = class_logits(classifier, ex.update_feature);
        const int target = ex.label == UpdateLabel::weakener ? 0 : 1;
        std::array<double, 2> dloss_dz{0.0, 0.0};
        if (mode == ClassifierLoss::softmax_ce) {
            // logsumexp(z) - z[target]
            const double m = std::max(z[0], z[1]);
            const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
            categorical_total += lse - z[target];
            const auto p = softmax2(z);
            dloss_dz = {p[0], p[1]};
            dloss_dz[target] -= 1.0;
        } else {
            // Eq-literal reading: -sum_j y_j log sigmoid(z_j), so only the
            // target logit receives gradient.
            categorical_total += softplus(-z[target]);
            dloss_dz[target] = -sigmoid(-z[target]);
        }

        if (gradients != nullptr) {
            // d pairwise / d margin, folded with the (1 - alpha) weight
            const double dmargin = -sign * sigmoid(-margin * sign) * inv_n * (1.0 - alpha);
            for (std::size_t i = 0; i < dim; ++i) {
                gradients->strength_w[i] +=
                    dmargin * (ex.update_feature.values[i] - ex.caption_feature.values[i]);
            }
            // b_s cancels in the margin; gradient contribution is zero.
            for (int k = 0; k < 2; ++k) {
                const double dz = dloss_dz[k] * inv_n * alpha;
                if (dz == 0.0) continue;
                for (std::size_t i = 0; i < dim; ++i) {
                    gradients->class_w[k][i] += dz * ex.update_feature.values[i];
                }
                gradients->class_b[k] += dz;
            }
        }
    }

    BatchLoss out;
    out.pairwise = pairwise_total * inv_n;
    out.categorical = categorical_total * inv_n;
    out.combined = combined_loss(out.pairwise, out.categorical, alpha);
    return out;
}

}  // namespace dve
