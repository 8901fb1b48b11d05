#include "dve/evaluator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "json_util.hpp"

namespace dve {

namespace {

constexpr const char* kMetadataFile = "metadata.json";
constexpr const char* kParamsFile = "params.bin";

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = state;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Unbiased bounded draw; keeps shuffles identical across standard libraries.
std::size_t bounded(std::uint64_t& state, std::size_t n) noexcept {
    const std::uint64_t threshold = (~std::uint64_t{0} - n + 1) % n;
    for (;;) {
        const std::uint64_t r = splitmix64(state);
        if (r >= threshold) return static_cast<std::size_t>(r % n);
    }
}

void fisher_yates(std::vector<std::size_t>& indices, std::uint64_t& state) {
    for (std::size_t i = indices.size(); i > 1; --i) {
        std::swap(indices[i - 1], indices[bounded(state, i)]);
    }
}

void append_f32(std::string& out, double value) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
    out.push_back(static_cast<char>(bits & 0xFF));
    out.push_back(static_cast<char>((bits >> 8) & 0xFF));
    out.push_back(static_cast<char>((bits >> 16) & 0xFF));
    out.push_back(static_cast<char>((bits >> 24) & 0xFF));
}

double read_f32(const std::string& bytes, std::size_t index) {
    const std::size_t off = index * 4;
    const std::uint32_t bits = static_cast<std::uint8_t>(bytes[off]) |
                               (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[off + 1]))
                                << 8) |
                               (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[off + 2]))
                                << 16) |
                               (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[off + 3]))
                                << 24);
    return static_cast<double>(std::bit_cast<float>(bits));
}

double f32_round_trip(double v) noexcept { return static_cast<double>(static_cast<float>(v)); }

// Adam with torch-style coupled weight decay (decay folded into the gradient).
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::size_t step, double lr, double weight_decay) {
    const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
    const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + weight_decay * params[i];
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
        const double m_hat = state.m[i] / bias1;
        const double v_hat = state.v[i] / bias2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw AlphaOutOfRange("TrainConfig: alpha must lie in [0, 1], got " +
                              std::to_string(alpha));
    }
    if (learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay must be non-negative");
    if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be positive");
    if (max_epochs == 0) throw ConfigError("TrainConfig: max_epochs must be positive");
}

EvaluatorModel::EvaluatorModel(std::shared_ptr<VisualEncoder> visual,
                               std::shared_ptr<TextPairEncoder> text, TrainConfig config,
                               EncoderSpec visual_spec, EncoderSpec text_spec)
    : visual_(std::move(visual)),
      text_(std::move(text)),
      config_(std::move(config)),
      visual_spec_(std::move(visual_spec)),
      text_spec_(std::move(text_spec)) {
    config_.validate();
    strength_ = make_strength_head(fused_dim());
    classifier_ = make_classification_head(fused_dim());
}

FusedFeature EvaluatorModel::fuse_triplet(const ImagePremise& premise,
                                          const Hypothesis& hypothesis,
                                          const std::string& text) const {
    const auto visual = visual_->encode(premise);
    const auto pair = text_->encode(hypothesis, text);
    if (visual.size() != visual_->dim()) {
        throw DimensionMismatch("visual encoder produced " + std::to_string(visual.size()) +
                                " values, declared " + std::to_string(visual_->dim()));
    }
    if (pair.size() != text_->dim()) {
        throw DimensionMismatch("text encoder produced " + std::to_string(pair.size()) +
                                " values, declared " + std::to_string(text_->dim()));
    }
    return fuse(visual, pair);
}

double EvaluatorModel::score(const ImagePremise& premise, const Hypothesis& hypothesis,
                             const std::string& update_text) const {
    return strength_score(strength_, fuse_triplet(premise, hypothesis, update_text));
}

Classification EvaluatorModel::classify_triplet(const ImagePremise& premise,
                                                const Hypothesis& hypothesis,
                                                const std::string& update_text) const {
    return classify(classifier_, fuse_triplet(premise, hypothesis, update_text));
}

UpdateLabel EvaluatorModel::predict_label(const ImagePremise& premise,
                                          const Hypothesis& hypothesis,
                                          const std::string& update_text) const {
    return classify_triplet(premise, hypothesis, update_text).label;
}

void EvaluatorModel::save(const std::string& directory) const {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) {
        throw IoError("checkpoint: cannot create '" + directory + "': " + ec.message());
    }
    const std::size_t dim = fused_dim();

    nlohmann::json meta{
        {"format", "dve-checkpoint"},
        {"version", 1},
        {"visual_dim", visual_->dim()},
        {"text_dim", text_->dim()},
        {"alpha", config_.alpha},
        {"learning_rate", config_.learning_rate},
        {"weight_decay", config_.weight_decay},
        {"batch_size", config_.batch_size},
        {"max_epochs", config_.max_epochs},
        {"seed", config_.seed},
        {"freeze_encoders", config_.freeze_encoders},
        {"classifier_loss", to_string(config_.classifier_loss)},
        {"visual_encoder", encoder_spec_to_json(visual_spec_)},
        {"text_encoder", encoder_spec_to_json(text_spec_)},
        {"selected_epoch", selected_epoch},
        {"validation_history", validation_history},
        {"manifest",
         nlohmann::json::array({
             {{"name", "strength.weight"}, {"shape", {dim}}},
             {{"name", "strength.bias"}, {"shape", {1}}},
             {{"name", "classification.weight"}, {"shape", {2, dim}}},
             {{"name", "classification.bias"}, {"shape", {2}}},
         })},
    };

    std::ofstream meta_out(fs::path(directory) / kMetadataFile, std::ios::trunc);
    if (!meta_out) {
        throw IoError("checkpoint: cannot write metadata in '" + directory + "'");
    }
    meta_out << meta.dump(2) << '\n';

    std::string blob;
    blob.reserve((dim + 1 + 2 * dim + 2) * 4);
    for (double w : strength_.weights) append_f32(blob, w);
    append_f32(blob, strength_.bias);
    for (int k = 0; k < 2; ++k) {
        for (double w : classifier_.weights[k]) append_f32(blob, w);
    }
    for (double b : classifier_.bias) append_f32(blob, b);

    std::ofstream params_out(fs::path(directory) / kParamsFile, std::ios::binary | std::ios::trunc);
    if (!params_out) {
        throw IoError("checkpoint: cannot write parameters in '" + directory + "'");
    }
    params_out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

EvaluatorModel EvaluatorModel::load(const std::string& directory) {
    namespace fs = std::filesystem;
    std::ifstream meta_in(fs::path(directory) / kMetadataFile);
    if (!meta_in) {
        throw IoError("checkpoint: cannot open metadata in '" + directory + "'");
    }
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("checkpoint metadata: " + std::string(e.what()));
    }
    if (meta.value("format", "") != "dve-checkpoint") {
        throw SchemaError("checkpoint: unrecognized format in '" + directory + "'");
    }

    TrainConfig config;
    config.alpha = meta.at("alpha").get<double>();
    config.learning_rate = meta.at("learning_rate").get<double>();
    config.weight_decay = meta.at("weight_decay").get<double>();
    config.batch_size = meta.at("batch_size").get<std::size_t>();
    config.max_epochs = meta.at("max_epochs").get<std::size_t>();
    config.seed = meta.at("seed").get<std::uint64_t>();
    config.freeze_encoders = meta.at("freeze_encoders").get<bool>();
    config.classifier_loss =
        classifier_loss_from_string(meta.at("classifier_loss").get<std::string>());

    const EncoderSpec visual_spec = encoder_spec_from_json(meta.at("visual_encoder"));
    const EncoderSpec text_spec = encoder_spec_from_json(meta.at("text_encoder"));
    auto visual = make_visual_encoder(visual_spec);
    auto text = make_text_encoder(text_spec);
    if (visual->dim() != meta.at("visual_dim").get<std::size_t>() ||
        text->dim() != meta.at("text_dim").get<std::size_t>()) {
        throw DimensionMismatch("checkpoint: encoder dims disagree with metadata");
    }

    EvaluatorModel model(std::move(visual), std::move(text), config, visual_spec, text_spec);
    model.selected_epoch = meta.value("selected_epoch", -1);
    model.validation_history = meta.value("validation_history", std::vector<double>{});

    const std::size_t dim = model.fused_dim();
    const std::size_t expected_values = dim + 1 + 2 * dim + 2;
    std::ifstream params_in(fs::path(directory) / kParamsFile, std::ios::binary);
    if (!params_in) {
        throw IoError("checkpoint: cannot open parameters in '" + directory + "'");
    }
    std::string blob((std::istreambuf_iterator<char>(params_in)),
                     std::istreambuf_iterator<char>());
    if (blob.size() != expected_values * 4) {
        throw DimensionMismatch("checkpoint: parameter blob has " +
                                std::to_string(blob.size() / 4) + " values, manifest expects " +
                                std::to_string(expected_values));
    }
    std::size_t index = 0;
    for (std::size_t i = 0; i < dim; ++i) model.strength_.weights[i] = read_f32(blob, index++);
    model.strength_.bias = read_f32(blob, index++);
    for (int k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
            model.classifier_.weights[k][i] = read_f32(blob, index++);
        }
    }
    for (int k = 0; k < 2; ++k) model.classifier_.bias[k] = read_f32(blob, index++);
    return model;
}

namespace {

TrainExample make_example(const EvaluatorModel& model, const DveSample& sample) {
    if (!sample.update.label.has_value()) {
        throw Error("train: sample without update label (hypothesis '" + sample.hypothesis.text +
                    "')");
    }
    const auto visual = model.visual_encoder().encode(sample.premise);
    const auto update = model.text_encoder().encode(sample.hypothesis, sample.update.text);
    const auto caption = model.text_encoder().encode(sample.hypothesis, sample.caption.text);
    TrainExample ex;
    ex.update_feature = fuse(visual, update);
    ex.caption_feature = fuse(visual, caption);
    ex.label = *sample.update.label;
    return ex;
}

}  // namespace

TrainResult train(const DveDataset& dataset, std::shared_ptr<VisualEncoder> visual,
                  std::shared_ptr<TextPairEncoder> text, const TrainConfig& config,
                  EncoderSpec visual_spec, EncoderSpec text_spec, std::ostream* progress) {
    config.validate();

    std::vector<const DveSample*> train_samples;
    std::vector<const DveSample*> val_samples;
    for (const auto& sample : dataset.samples) {
        if (sample.split == Split::train) {
            train_samples.push_back(&sample);
        } else if (sample.split == Split::validation) {
            val_samples.push_back(&sample);
        }
    }
    if (train_samples.empty() || val_samples.empty()) {
        throw Error("train: need non-empty train and validation splits (got " +
                    std::to_string(train_samples.size()) + " train, " +
                    std::to_string(val_samples.size()) + " validation)");
    }
    for (const DveSample* s : train_samples) {
        if (is_blank(s->caption.text)) {
            throw MissingCaption("train: sample with hypothesis '" + s->hypothesis.text +
                                 "' lacks the caption required by the contrastive pair");
        }
    }

    TrainResult result{EvaluatorModel(std::move(visual), std::move(text), config, visual_spec,
                                      text_spec),
                       {},
                       0};
    EvaluatorModel& model = result.model;

    // Provided encoders are fixed feature extractors, so embeddings are
    // precomputed once whether or not freezing was requested.
    std::vector<TrainExample> train_examples;
    train_examples.reserve(train_samples.size());
    for (const DveSample* s : train_samples) train_examples.push_back(make_example(model, *s));
    std::vector<TrainExample> val_examples;
    val_examples.reserve(val_samples.size());
    for (const DveSample* s : val_samples) val_examples.push_back(make_example(model, *s));

    const std::size_t dim = model.fused_dim();
    StrengthHead& strength = model.strength_head();
    ClassificationHead& classifier = model.classification_head();

    AdamState adam_sw(dim);
    AdamState adam_sb(1);
    AdamState adam_cw0(dim);
    AdamState adam_cw1(dim);
    AdamState adam_cb(2);
    std::size_t step = 0;

    StrengthHead best_strength = strength;
    ClassificationHead best_classifier = classifier;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;

    std::vector<std::size_t> order(train_examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::uint64_t rng = config.seed;

    auto evaluate = [&](std::span<const TrainExample> examples, double* accuracy_out) {
        const BatchLoss loss = batch_loss(strength, classifier, examples, config.alpha,
                                          config.classifier_loss);
        if (accuracy_out != nullptr) {
            std::size_t correct = 0;
            for (const TrainExample& ex : examples) {
                const auto z = class_logits(classifier, ex.update_feature);
                if (label_from_logits(z) == ex.label) ++correct;
            }
            *accuracy_out = static_cast<double>(correct) / static_cast<double>(examples.size());
        }
        return loss;
    };

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        fisher_yates(order, rng);

        double train_pair = 0.0;
        double train_cat = 0.0;
        double train_comb = 0.0;
        std::size_t seen = 0;
        std::vector<TrainExample> batch;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_examples[order[i]]);

            HeadGradients grads;
            const BatchLoss loss = batch_loss(strength, classifier, batch, config.alpha,
                                              config.classifier_loss, &grads);
            if (!std::isfinite(loss.combined)) {
                throw DivergenceDetected("train: non-finite loss in epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(start / config.batch_size));
            }
            ++step;
            adam_step(strength.weights, grads.strength_w, adam_sw, step, config.learning_rate,
                      config.weight_decay);
            double bias_grad[1] = {grads.strength_b};
            double bias_param[1] = {strength.bias};
            adam_step(std::span<double>(bias_param, 1), std::span<const double>(bias_grad, 1),
                      adam_sb, step, config.learning_rate, config.weight_decay);
            strength.bias = bias_param[0];
            adam_step(classifier.weights[0], grads.class_w[0], adam_cw0, step,
                      config.learning_rate, config.weight_decay);
            adam_step(classifier.weights[1], grads.class_w[1], adam_cw1, step,
                      config.learning_rate, config.weight_decay);
            adam_step(classifier.bias, grads.class_b, adam_cb, step, config.learning_rate,
                      config.weight_decay);

            const double weight = static_cast<double>(batch.size());
            train_pair += loss.pairwise * weight;
            train_cat += loss.categorical * weight;
            train_comb += loss.combined * weight;
            seen += batch.size();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_pairwise = train_pair / static_cast<double>(seen);
        stats.train_categorical = train_cat / static_cast<double>(seen);
        stats.train_combined = train_comb / static_cast<double>(seen);
        const BatchLoss val = evaluate(val_examples, &stats.val_accuracy);
        stats.val_pairwise = val.pairwise;
        stats.val_categorical = val.categorical;
        stats.val_combined = val.combined;
        if (!std::isfinite(val.combined)) {
            throw DivergenceDetected("train: non-finite validation loss in epoch " +
                                     std::to_string(epoch));
        }
        result.history.push_back(stats);
        model.validation_history.push_back(val.combined);

        if (val.combined < best_val) {
            best_val = val.combined;
            best_epoch = epoch;
            best_strength = strength;
            best_classifier = classifier;
        }

        if (progress != nullptr) {
            *progress << "epoch " << epoch << " train L_p " << std::setprecision(6)
                      << stats.train_pairwise << " L_c " << stats.train_categorical << " L "
                      << stats.train_combined << " | val L_p " << stats.val_pairwise << " L_c "
                      << stats.val_categorical << " L " << stats.val_combined << " acc "
                      << stats.val_accuracy << '\n';
        }
    }

    strength = best_strength;
    classifier = best_classifier;
    // Quantize to the checkpoint precision so the in-memory model and a
    // reloaded checkpoint score identically.
    for (double& w : strength.weights) w = f32_round_trip(w);
    strength.bias = f32_round_trip(strength.bias);
    for (int k = 0; k < 2; ++k) {
        for (double& w : classifier.weights[k]) w = f32_round_trip(w);
        classifier.bias[k] = f32_round_trip(classifier.bias[k]);
    }
    result.selected_epoch = best_epoch;
    model.selected_epoch = static_cast<int>(best_epoch);
    return result;
}

}  // namespace dve
