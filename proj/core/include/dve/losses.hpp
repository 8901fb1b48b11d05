// Training objectives: pairwise contrastive loss over (update, caption) score
// pairs, categorical cross-entropy over the two update classes, and their
// weighted combination. Analytic head gradients live here so the training
// loop and the finite-difference checks share one implementation.
#pragma once

#include <array>
#include <span>
#include <vector>

#include "dve/heads.hpp"

namespace dve {

// Numerically stable log(1 + exp(x)).
double softplus(double x) noexcept;

double sigmoid(double x) noexcept;

// L_p = -(1/N) sum log sigmoid((s_u - s_c) * l), signs in {-1, +1}.
double pairwise_contrastive_loss(std::span<const double> update_scores,
                                 std::span<const double> caption_scores,
                                 std::span<const int> signs);

// L_c = -(1/N) sum_i sum_j y_ij log(max(y_hat_ij, eps)); rows of `predicted`
// are class probabilities, rows of `onehot` are one-hot targets.
double categorical_loss(std::span<const std::array<double, 2>> predicted,
                        std::span<const std::array<double, 2>> onehot);

// Clamp applied before the log in categorical_loss.
inline constexpr double kProbabilityClamp = 1e-7;

// L = (1 - alpha) * L_p + alpha * L_c, alpha in [0, 1].
double combined_loss(double pairwise, double categorical, double alpha);

// Which normalization feeds the categorical loss. softmax_ce treats the two
// logits jointly; sigmoid_bce is the elementwise-sigmoid reading.
enum class ClassifierLoss { softmax_ce, sigmoid_bce };

ClassifierLoss classifier_loss_from_string(std::string_view s);
std::string_view to_string(ClassifierLoss mode) noexcept;

// One training pair: the update triplet feature m_u (scored and classified)
// and the caption triplet feature m_c (contrastive baseline only).
struct TrainExample {
    FusedFeature update_feature;
    FusedFeature caption_feature;
    UpdateLabel label = UpdateLabel::weakener;
};

struct HeadGradients {
    std::vector<double> strength_w;
    double strength_b = 0.0;
    std::array<std::vector<double>, 2> class_w;
    std::array<double, 2> class_b{0.0, 0.0};
};

struct BatchLoss {
    double pairwise = 0.0;
    double categorical = 0.0;
    double combined = 0.0;
};

// Forward pass over a batch through both heads; cross-entropy is computed
// from logits, not post-normalization probabilities. When `gradients` is
// non-null it receives d(combined)/d(head params).
BatchLoss batch_loss(const StrengthHead& strength, const ClassificationHead& classifier,
                     std::span<const TrainExample> batch, double alpha, ClassifierLoss mode,
                     HeadGradients* gradients = nullptr);

}  // namespace dve
