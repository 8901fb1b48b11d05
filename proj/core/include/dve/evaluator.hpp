// The inference-aware evaluator: encoders feeding two linear heads, trained
// with the combined contrastive + categorical objective, served as triplet
// scoring and update classification.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dve/dataset.hpp"
#include "dve/encoders.hpp"
#include "dve/heads.hpp"
#include "dve/losses.hpp"
#include "dve/scorer.hpp"

namespace dve {

struct TrainConfig {
    double alpha = 0.9;
    double learning_rate = 5e-6;
    double weight_decay = 1e-4;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 20;
    std::uint64_t seed = 42;
    bool freeze_encoders = false;
    ClassifierLoss classifier_loss = ClassifierLoss::softmax_ce;

    void validate() const;
};

class EvaluatorModel final : public TripletScorer {
public:
    EvaluatorModel(std::shared_ptr<VisualEncoder> visual, std::shared_ptr<TextPairEncoder> text,
                   TrainConfig config, EncoderSpec visual_spec, EncoderSpec text_spec);

    const VisualEncoder& visual_encoder() const noexcept { return *visual_; }
    const TextPairEncoder& text_encoder() const noexcept { return *text_; }
    std::size_t fused_dim() const noexcept { return visual_->dim() + text_->dim(); }

    StrengthHead& strength_head() noexcept { return strength_; }
    const StrengthHead& strength_head() const noexcept { return strength_; }
    ClassificationHead& classification_head() noexcept { return classifier_; }
    const ClassificationHead& classification_head() const noexcept { return classifier_; }
    const TrainConfig& config() const noexcept { return config_; }

    FusedFeature fuse_triplet(const ImagePremise& premise, const Hypothesis& hypothesis,
                              const std::string& text) const;

    // s = <W_s, [i, e]> + b_s for the (update, premise, hypothesis) triplet.
    double score(const ImagePremise& premise, const Hypothesis& hypothesis,
                 const std::string& update_text) const override;

    Classification classify_triplet(const ImagePremise& premise, const Hypothesis& hypothesis,
                                    const std::string& update_text) const;

    UpdateLabel predict_label(const ImagePremise& premise, const Hypothesis& hypothesis,
                              const std::string& update_text) const;

    // Checkpoint directory: metadata.json + params.bin (little-endian f32 in
    // manifest order). Saving quantizes the heads to f32 so a reloaded model
    // scores identically.
    void save(const std::string& directory) const;
    static EvaluatorModel load(const std::string& directory);

    int selected_epoch = -1;
    std::vector<double> validation_history;  // combined loss per epoch

private:
    std::shared_ptr<VisualEncoder> visual_;
    std::shared_ptr<TextPairEncoder> text_;
    StrengthHead strength_;
    ClassificationHead classifier_;
    TrainConfig config_;
    EncoderSpec visual_spec_;
    EncoderSpec text_spec_;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_pairwise = 0.0;
    double train_categorical = 0.0;
    double train_combined = 0.0;
    double val_pairwise = 0.0;
    double val_categorical = 0.0;
    double val_combined = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    EvaluatorModel model;
    std::vector<EpochStats> history;
    std::size_t selected_epoch = 0;  // epoch with the lowest validation combined loss
};

// Two forward passes per sample through the shared heads: the update triplet
// yields (s_u, logits), the caption triplet yields s_c. Reproducible for a
// fixed seed; throws MissingCaption / DivergenceDetected per contract.
TrainResult train(const DveDataset& dataset, std::shared_ptr<VisualEncoder> visual,
                  std::shared_ptr<TextPairEncoder> text, const TrainConfig& config,
                  EncoderSpec visual_spec, EncoderSpec text_spec,
                  std::ostream* progress = nullptr);

}  // namespace dve
