#include "doctest.h"

#include <cmath>
#include <random>

#include "dve/evaluator.hpp"
#include "test_util.hpp"

using namespace dve;

namespace {

EvaluatorModel make_test_model(std::size_t d1 = 4, std::size_t d2 = 4, std::uint64_t seed = 42) {
    EncoderSpec visual_spec{"test-deterministic", d1, seed, "", 0};
    EncoderSpec text_spec{"test-deterministic", d2, seed, "", 0};
    return EvaluatorModel(make_visual_encoder(visual_spec), make_text_encoder(text_spec),
                          TrainConfig{}, visual_spec, text_spec);
}

FusedFeature feature_of(std::vector<double> values, std::size_t visual_dim) {
    FusedFeature f;
    f.values = std::move(values);
    f.visual_dim = visual_dim;
    return f;
}

}  // namespace

TEST_SUITE("evaluator") {

TEST_CASE("fuse concatenates visual then textual") {
    const std::vector<double> i{1.0, 2.0};
    const std::vector<double> e{3.0};
    const FusedFeature m = fuse(i, e);
    CHECK(m.values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(m.visual_dim == 2);
}

TEST_CASE("fused length is d1 + d2") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> dim(1, 32);
    for (int t = 0; t < 50; ++t) {
        const std::size_t d1 = dim(rng);
        const std::size_t d2 = dim(rng);
        const std::vector<double> i(d1, 0.5);
        const std::vector<double> e(d2, -0.5);
        CHECK(fuse(i, e).size() == d1 + d2);
    }
}

TEST_CASE("fusing zero vectors gives the zero vector") {
    const std::vector<double> i(3, 0.0);
    const std::vector<double> e(2, 0.0);
    const FusedFeature m = fuse(i, e);
    CHECK(m.size() == 5);
    for (double v : m.values) CHECK(v == 0.0);
}

TEST_CASE("strength score is the affine map <w, m> + b") {
    StrengthHead zero = make_strength_head(4);
    const FusedFeature m = feature_of({3.0, -1.0, 2.0, 7.0}, 2);
    CHECK(strength_score(zero, m) == 0.0);

    StrengthHead head = make_strength_head(4);
    head.weights[0] = 1.0;
    head.bias = 2.0;
    CHECK(strength_score(head, m) == 5.0);

    CHECK_THROWS_AS(strength_score(head, feature_of({1.0, 2.0}, 1)), DimensionMismatch);
}

TEST_CASE("strength score linearity") {
    // s(a*m1 + b*m2) = a*s(m1) + b*s(m2) + (1-a-b)*bias
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        StrengthHead head = make_strength_head(6);
        for (auto& w : head.weights) w = value(rng);
        head.bias = value(rng);
        std::vector<double> m1(6);
        std::vector<double> m2(6);
        for (auto& v : m1) v = value(rng);
        for (auto& v : m2) v = value(rng);
        const double a = value(rng);
        const double b = value(rng);
        std::vector<double> mixed(6);
        for (std::size_t i = 0; i < 6; ++i) mixed[i] = a * m1[i] + b * m2[i];

        const double lhs = strength_score(head, feature_of(mixed, 3));
        const double rhs = a * strength_score(head, feature_of(m1, 3)) +
                           b * strength_score(head, feature_of(m2, 3)) +
                           (1.0 - a - b) * head.bias;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("classify with zero head is uniform") {
    ClassificationHead head = make_classification_head(3);
    const auto result = classify(head, feature_of({1.0, 2.0, 3.0}, 2));
    CHECK(result.probabilities[0] == doctest::Approx(0.5));
    CHECK(result.probabilities[1] == doctest::Approx(0.5));
}

TEST_CASE("decisive logits pick the matching label") {
    ClassificationHead head = make_classification_head(1);
    head.bias = {10.0, -10.0};
    const auto weak = classify(head, feature_of({0.0}, 0));
    CHECK(weak.label == UpdateLabel::weakener);
    CHECK(weak.probabilities[0] > 0.999);

    head.bias = {0.1, 5.0};
    CHECK(classify(head, feature_of({0.0}, 0)).label == UpdateLabel::strengthener);
    head.bias = {5.0, 0.1};
    CHECK(classify(head, feature_of({0.0}, 0)).label == UpdateLabel::weakener);
}

TEST_CASE("classification is shift-invariant and scale-stable in the label") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        const std::array<double, 2> z{value(rng), value(rng)};
        const double c = value(rng);
        const auto p = softmax2(z);
        const auto shifted = softmax2({z[0] + c, z[1] + c});
        CHECK(p[0] == doctest::Approx(shifted[0]).epsilon(1e-12));
        CHECK(p[1] == doctest::Approx(shifted[1]).epsilon(1e-12));

        const double scale = std::uniform_real_distribution<double>(0.1, 4.0)(rng);
        CHECK(label_from_logits(z) == label_from_logits({z[0] * scale, z[1] * scale}));
    }
}

TEST_CASE("classify returns a valid distribution") {
    std::mt19937_64 rng(29);
    // Logit gaps beyond ~36 saturate double precision to exactly 0/1.
    std::uniform_real_distribution<double> value(-15.0, 15.0);
    for (int t = 0; t < 200; ++t) {
        const auto p = softmax2({value(rng), value(rng)});
        CHECK(p[0] > 0.0);
        CHECK(p[1] > 0.0);
        CHECK(p[0] < 1.0);
        CHECK(p[1] < 1.0);
        CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("zero-initialized model scores every triplet 0") {
    const EvaluatorModel model = make_test_model();
    const ImagePremise premise{"img-1", "", {}, {}};
    CHECK(model.score(premise, Hypothesis{"a dog runs"}, "it is fast") == 0.0);
    CHECK(model.score(premise, Hypothesis{"anything"}, "whatever") == 0.0);
}

TEST_CASE("score_triplet matches the hand-computed dot product") {
    EvaluatorModel model = make_test_model(3, 3, 7);
    auto& head = model.strength_head();
    head.weights = {0.5, -1.0, 2.0, 0.25, 0.0, -0.75};
    head.bias = 0.125;

    const ImagePremise premise{"img-2", "", {}, {}};
    const Hypothesis hypothesis{"the cat sleeps"};
    const std::string update = "it purrs";

    const auto visual = model.visual_encoder().encode(premise);
    const auto text = model.text_encoder().encode(hypothesis, update);
    double expected = head.bias;
    for (std::size_t i = 0; i < 3; ++i) expected += head.weights[i] * visual[i];
    for (std::size_t i = 0; i < 3; ++i) expected += head.weights[3 + i] * text[i];

    CHECK(model.score(premise, hypothesis, update) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("scoring is pure: identical calls give identical scores") {
    EvaluatorModel model = make_test_model();
    auto& head = model.strength_head();
    for (std::size_t i = 0; i < head.weights.size(); ++i) head.weights[i] = 0.1 * (i + 1);
    const ImagePremise premise{"img-3", "", {}, {}};
    const Hypothesis hypothesis{"a truck idles"};
    const double first = model.score(premise, hypothesis, "engine running");
    const double second = model.score(premise, hypothesis, "engine running");
    CHECK(first == second);
}

TEST_CASE("predict_label is the classification argmax") {
    EvaluatorModel model = make_test_model();
    model.classification_head().bias = {0.1, 5.0};
    const ImagePremise premise{"img-4", "", {}, {}};
    CHECK(model.predict_label(premise, Hypothesis{"h"}, "u") == UpdateLabel::strengthener);
    model.classification_head().bias = {5.0, 0.1};
    CHECK(model.predict_label(premise, Hypothesis{"h"}, "u") == UpdateLabel::weakener);
}

TEST_CASE("checkpoint round-trip reproduces scoring exactly") {
    test::TempDir dir;
    EvaluatorModel model = make_test_model(5, 3, 123);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    for (auto& w : model.strength_head().weights) w = value(rng);
    model.strength_head().bias = value(rng);
    for (int k = 0; k < 2; ++k) {
        for (auto& w : model.classification_head().weights[k]) w = value(rng);
        model.classification_head().bias[k] = value(rng);
    }
    model.selected_epoch = 7;
    model.validation_history = {0.9, 0.5, 0.4};

    const std::string first = dir.file("ckpt-a");
    model.save(first);
    EvaluatorModel loaded = EvaluatorModel::load(first);
    CHECK(loaded.selected_epoch == 7);
    CHECK(loaded.fused_dim() == model.fused_dim());

    // The loaded model quantized to f32; saving it again must be byte-identical.
    const std::string second = dir.file("ckpt-b");
    loaded.save(second);
    CHECK(test::read_file(first + "/params.bin") == test::read_file(second + "/params.bin"));
    CHECK(test::read_file(first + "/metadata.json") == test::read_file(second + "/metadata.json"));

    const ImagePremise premise{"img-5", "", {}, {}};
    const Hypothesis hypothesis{"a boat floats"};
    EvaluatorModel reloaded = EvaluatorModel::load(second);
    CHECK(loaded.score(premise, hypothesis, "water is calm") ==
          reloaded.score(premise, hypothesis, "water is calm"));
}

TEST_CASE("checkpoint with a truncated parameter blob is rejected") {
    test::TempDir dir;
    EvaluatorModel model = make_test_model();
    const std::string path = dir.file("ckpt");
    model.save(path);
    auto blob = test::read_file(path + "/params.bin");
    blob.resize(blob.size() - 4);
    test::write_file(path + "/params.bin", blob);
    CHECK_THROWS_AS(EvaluatorModel::load(path), DimensionMismatch);
}

TEST_CASE("loading a missing checkpoint throws IoError") {
    CHECK_THROWS_AS(EvaluatorModel::load("/nonexistent/dve-ckpt"), IoError);
}

TEST_CASE("an encoder that lies about its dimension is rejected") {
    class LyingEncoder final : public VisualEncoder {
    public:
        std::size_t dim() const noexcept override { return 4; }
        bool trainable() const noexcept override { return false; }
        std::string id() const override { return "lying"; }
        std::vector<double> encode(const ImagePremise&) const override {
            return {1.0, 2.0, 3.0};  // three values, not four
        }
    };
    EncoderSpec text_spec{"test-deterministic", 4, 1, "", 0};
    EvaluatorModel model(std::make_shared<LyingEncoder>(), make_text_encoder(text_spec),
                         TrainConfig{}, EncoderSpec{"test-deterministic", 4, 1, "", 0},
                         text_spec);
    CHECK_THROWS_AS(model.score(ImagePremise{"x", "", {}, {}}, Hypothesis{"h"}, "u"),
                    DimensionMismatch);
}

}  // TEST_SUITE
