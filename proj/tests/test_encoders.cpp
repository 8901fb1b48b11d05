#include "doctest.h"

#include <fstream>

#include "json.hpp"

#include "dve/encoders.hpp"
#include "test_util.hpp"

using namespace dve;

TEST_SUITE("encoders") {

TEST_CASE("deterministic features match the recorded fixture") {
    // Frozen from the seeded hash construction; guards cross-platform drift.
    const auto v = deterministic_features("hello", 6, 42);
    const std::vector<double> expected{
        -0.2324848558247965,  0.9740004534417952,  -0.1052518237326876,
        0.90306948906750129,  0.55901154684417409, -0.78381614076374762,
    };
    REQUIRE(v.size() == expected.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == expected[i]);
}

TEST_CASE("deterministic features land in [-1, 1] and depend on the seed") {
    const auto a = deterministic_features("payload", 64, 1);
    const auto b = deterministic_features("payload", 64, 2);
    CHECK(a != b);
    for (double v : a) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("output dimensionality is constant per encoder instance") {
    DeterministicVisualEncoder visual(12, 3);
    DeterministicTextEncoder text(9, 3);
    for (const char* id : {"a", "някой", "a much longer identifier with spaces"}) {
        CHECK(visual.encode(ImagePremise{id, "", {}, {}}).size() == 12);
        CHECK(text.encode(Hypothesis{id}, "tail").size() == 9);
    }
}

TEST_CASE("visual test encoder hashes file bytes when readable") {
    test::TempDir dir;
    const std::string path = dir.file("img.bin");
    test::write_file(path, "AAAA");
    DeterministicVisualEncoder encoder(8, 42);

    const auto from_file = encoder.encode(ImagePremise{"id-1", path, {}, {}});
    CHECK(from_file == deterministic_features("AAAA", 8, 42));

    test::write_file(path, "BBBB");
    CHECK(encoder.encode(ImagePremise{"id-1", path, {}, {}}) != from_file);

    // Unreadable source falls back to the image id, whatever the path says.
    const auto by_id_a = encoder.encode(ImagePremise{"id-1", dir.file("missing-a"), {}, {}});
    const auto by_id_b = encoder.encode(ImagePremise{"id-1", dir.file("missing-b"), {}, {}});
    CHECK(by_id_a == by_id_b);
    CHECK(by_id_a == deterministic_features("id-1", 8, 42));
}

TEST_CASE("encoding the same input twice is identical") {
    DeterministicVisualEncoder visual(16, 11);
    DeterministicTextEncoder text(16, 11);
    const ImagePremise premise{"picture", "", {}, {}};
    CHECK(visual.encode(premise) == visual.encode(premise));
    CHECK(text.encode(Hypothesis{"h"}, "u") == text.encode(Hypothesis{"h"}, "u"));
}

TEST_CASE("encode_pair is order-sensitive") {
    DeterministicTextEncoder text(4, 7);
    const auto ab = text.encode(Hypothesis{"a"}, "b");
    const auto ba = text.encode(Hypothesis{"b"}, "a");
    CHECK(ab != ba);
    // Frozen values for both orders.
    CHECK(ab == std::vector<double>{-0.40744600322618019, 0.40918761089660083,
                                    0.5087452562242023, 0.04081383528072946});
    CHECK(ba == std::vector<double>{0.55841941884051582, 0.66275520814650335,
                                    -0.7536066518640725, 0.37165635504731265});
}

TEST_CASE("empty texts are rejected") {
    DeterministicTextEncoder text(4, 7);
    CHECK_THROWS_AS(text.encode(Hypothesis{""}, "b"), EmptyText);
    CHECK_THROWS_AS(text.encode(Hypothesis{"  "}, "b"), EmptyText);
    CHECK_THROWS_AS(text.encode(Hypothesis{"a"}, ""), EmptyText);
}

TEST_CASE("sequence budget keeps the hypothesis whole") {
    const auto [hyp, tail] = truncate_pair("one two three", "a b c d e", 6);
    CHECK(hyp == "one two three");
    CHECK(tail == "a b c");  // truncated from the second text first
    CHECK_THROWS_AS(truncate_pair("one two three four", "x", 3), TokenBudgetExceeded);

    DeterministicTextEncoder budgeted(4, 7, 4);
    CHECK_THROWS_AS(budgeted.encode(Hypothesis{"a b c d e"}, "u"), TokenBudgetExceeded);
    // Same truncated pair, same embedding.
    CHECK(budgeted.encode(Hypothesis{"a b"}, "u v w x y") ==
          budgeted.encode(Hypothesis{"a b"}, "u v"));
}

TEST_CASE("feature-table encoders expose the declared paper dimensions") {
    test::TempDir dir;
    const std::string visual_path = dir.file("visual.jsonl");
    {
        std::ofstream out(visual_path);
        out << R"({"key": "1000.jpg", "vector": [)";
        for (std::size_t i = 0; i < kPaperVisualDim; ++i) {
            out << (i == 0 ? "" : ",") << "0.125";
        }
        out << "]}\n";
    }
    FeatureTableVisualEncoder visual(visual_path, kPaperVisualDim);
    CHECK(visual.dim() == 2048);
    CHECK(visual.encode(ImagePremise{"1000.jpg", "", {}, {}}).size() == 2048);
    CHECK_THROWS_AS(visual.encode(ImagePremise{"absent.jpg", "", {}, {}}), EncodeError);

    const std::string text_path = dir.file("text.jsonl");
    {
        nlohmann::json row{{"key", FeatureTableTextEncoder::pair_key("a hyp", "an update")},
                           {"vector", {0.5, -0.5}}};
        test::write_file(text_path, row.dump() + "\n");
    }
    FeatureTableTextEncoder text(text_path, 2);
    CHECK(text.encode(Hypothesis{"a hyp"}, "an update") == std::vector<double>{0.5, -0.5});
    CHECK_THROWS_AS(text.encode(Hypothesis{"a hyp"}, "other"), EncodeError);
}

TEST_CASE("feature tables validate dimensions and content") {
    test::TempDir dir;
    const std::string path = dir.file("table.jsonl");
    test::write_file(path, R"({"key": "a", "vector": [1.0, 2.0]})" "\n"
                           R"({"key": "b", "vector": [1.0]})" "\n");
    CHECK_THROWS_AS(FeatureTable::load(path, 0), DimensionMismatch);

    test::write_file(path, R"({"key": "a"})" "\n");
    CHECK_THROWS_AS(FeatureTable::load(path, 0), SchemaError);

    CHECK_THROWS_AS(FeatureTable::load(dir.file("missing.jsonl"), 0), IoError);
}

TEST_CASE("encoder factory honors the selection strings") {
    EncoderSpec spec{"test-deterministic", 8, 5, "", 0};
    CHECK(make_visual_encoder(spec)->dim() == 8);
    CHECK(make_text_encoder(spec)->dim() == 8);

    EncoderSpec unknown{"paper-audio", 8, 5, "", 0};
    CHECK_THROWS_AS(make_visual_encoder(unknown), ConfigError);
    CHECK_THROWS_AS(make_text_encoder(unknown), ConfigError);

    // paper-* kinds require a table path
    EncoderSpec missing{"paper-visual", 0, 5, "", 0};
    CHECK_THROWS_AS(make_visual_encoder(missing), ConfigError);
    EncoderSpec missing_text{"paper-text", 0, 5, "", 0};
    CHECK_THROWS_AS(make_text_encoder(missing_text), ConfigError);
}

TEST_CASE("trainable flag: in-tree encoders are fixed feature extractors") {
    DeterministicVisualEncoder visual(4, 1);
    DeterministicTextEncoder text(4, 1);
    CHECK_FALSE(visual.trainable());
    CHECK_FALSE(text.trainable());
}

}  // TEST_SUITE
