// Pluggable embedding producers for image premises and hypothesis-text pairs.
//
// Two families ship in-tree:
//  * test-deterministic — seeded integer-hash features, identical across runs
//    and platforms; carries the whole desk-scale test suite without weights.
//  * paper-visual / paper-text — fixed-dimension lookup over a feature table
//    exported offline from the pretrained backbones (ResNet-50 image features
//    at d1=2048, BERT-large [CLS] pair features at d2=1024).
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dve/errors.hpp"
#include "dve/types.hpp"

namespace dve {

class VisualEncoder {
public:
    virtual ~VisualEncoder() = default;

    virtual std::size_t dim() const noexcept = 0;
    virtual bool trainable() const noexcept = 0;
    // Stable identifier persisted into checkpoints.
    virtual std::string id() const = 0;

    // Returns exactly dim() finite values for a resolvable premise.
    virtual std::vector<double> encode(const ImagePremise& premise) const = 0;
};

class TextPairEncoder {
public:
    virtual ~TextPairEncoder() = default;

    virtual std::size_t dim() const noexcept = 0;
    virtual bool trainable() const noexcept = 0;
    virtual std::string id() const = 0;

    // Joint embedding of the ordered pair (hypothesis, text); order-sensitive.
    virtual std::vector<double> encode(const Hypothesis& hypothesis,
                                       const std::string& text) const = 0;
};

// Seeded per-coordinate hash of the input bytes mapped into [-1, 1].
// Pure integer arithmetic, so outputs are bit-identical across platforms.
std::vector<double> deterministic_features(const std::string& bytes, std::size_t dim,
                                           std::uint64_t seed);

class DeterministicVisualEncoder final : public VisualEncoder {
public:
    DeterministicVisualEncoder(std::size_t dim, std::uint64_t seed);

    std::size_t dim() const noexcept override { return dim_; }
    bool trainable() const noexcept override { return false; }
    std::string id() const override;

    // Hashes the image file bytes when source_path is readable; otherwise
    // hashes the image_id so file-free fixtures stay encodable.
    std::vector<double> encode(const ImagePremise& premise) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

class DeterministicTextEncoder final : public TextPairEncoder {
public:
    // max_words == 0 disables the sequence budget.
    DeterministicTextEncoder(std::size_t dim, std::uint64_t seed, std::size_t max_words = 0);

    std::size_t dim() const noexcept override { return dim_; }
    bool trainable() const noexcept override { return false; }
    std::string id() const override;

    std::vector<double> encode(const Hypothesis& hypothesis,
                               const std::string& text) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::size_t max_words_;
};

// Sequence-budget policy: the hypothesis is kept whole and the second text is
// truncated first. Throws TokenBudgetExceeded if the hypothesis alone overflows.
std::pair<std::string, std::string> truncate_pair(const std::string& hypothesis,
                                                  const std::string& text,
                                                  std::size_t max_words);

// Key -> vector table loaded from JSONL ({"key": ..., "vector": [...]}).
class FeatureTable {
public:
    static FeatureTable load(const std::string& path, std::size_t expected_dim);

    const std::vector<double>* find(const std::string& key) const;
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return rows_.size(); }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> rows_;
};

class FeatureTableVisualEncoder final : public VisualEncoder {
public:
    FeatureTableVisualEncoder(std::string table_path, std::size_t dim);

    std::size_t dim() const noexcept override { return dim_; }
    bool trainable() const noexcept override { return false; }
    std::string id() const override;

    std::vector<double> encode(const ImagePremise& premise) const override;

private:
    std::string path_;
    std::size_t dim_;
    FeatureTable table_;
};

class FeatureTableTextEncoder final : public TextPairEncoder {
public:
    FeatureTableTextEncoder(std::string table_path, std::size_t dim);

    std::size_t dim() const noexcept override { return dim_; }
    bool trainable() const noexcept override { return false; }
    std::string id() const override;

    std::vector<double> encode(const Hypothesis& hypothesis,
                               const std::string& text) const override;

    static std::string pair_key(const std::string& hypothesis, const std::string& text);

private:
    std::string path_;
    std::size_t dim_;
    FeatureTable table_;
};

// Selection by config string. Kinds: "paper-visual", "paper-text",
// "test-deterministic". `weights` is the feature-table path for the
// backbone-backed kinds; `dim` 0 picks the kind's default (2048 visual /
// 1024 text).
struct EncoderSpec {
    std::string kind;
    std::size_t dim = 0;
    std::uint64_t seed = 42;
    std::string weights;
    std::size_t max_words = 0;

    bool operator==(const EncoderSpec&) const = default;
};

std::shared_ptr<VisualEncoder> make_visual_encoder(const EncoderSpec& spec);
std::shared_ptr<TextPairEncoder> make_text_encoder(const EncoderSpec& spec);

inline constexpr std::size_t kPaperVisualDim = 2048;
inline constexpr std::size_t kPaperTextDim = 1024;

}  // namespace dve
