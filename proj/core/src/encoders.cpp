#include "dve/encoders.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dve {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const std::string& bytes) noexcept {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

bool read_file_bytes(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return true;
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    std::istringstream in(s);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

std::string join_words(const std::vector<std::string>& words, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i > 0) out.push_back(' ');
        out += words[i];
    }
    return out;
}

}  // namespace

std::vector<double> deterministic_features(const std::string& bytes, std::size_t dim,
                                           std::uint64_t seed) {
    const std::uint64_t content = fnv1a(bytes);
    std::vector<double> out(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const std::uint64_t mixed = splitmix64(seed ^ splitmix64(content + k));
        // Top 53 bits -> [0, 1), then shift to [-1, 1).
        const double unit = static_cast<double>(mixed >> 11) * 0x1.0p-53;
        out[k] = unit * 2.0 - 1.0;
    }
    return out;
}

DeterministicVisualEncoder::DeterministicVisualEncoder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ConfigError("visual encoder dim must be positive");
}

std::string DeterministicVisualEncoder::id() const {
    return "test-deterministic/visual/d" + std::to_string(dim_) + "/s" + std::to_string(seed_);
}

std::vector<double> DeterministicVisualEncoder::encode(const ImagePremise& premise) const {
    std::string bytes;
    if (premise.source_path.empty() || !read_file_bytes(premise.source_path, bytes)) {
        if (premise.image_id.empty()) {
            throw ImageDecodeError("deterministic visual encoder: premise has neither readable "
                                   "source nor image_id");
        }
        bytes = premise.image_id;
    }
    return deterministic_features(bytes, dim_, seed_);
}

DeterministicTextEncoder::DeterministicTextEncoder(std::size_t dim, std::uint64_t seed,
                                                   std::size_t max_words)
    : dim_(dim), seed_(seed), max_words_(max_words) {
    if (dim_ == 0) throw ConfigError("text encoder dim must be positive");
}

std::string DeterministicTextEncoder::id() const {
    return "test-deterministic/text/d" + std::to_string(dim_) + "/s" + std::to_string(seed_);
}

std::vector<double> DeterministicTextEncoder::encode(const Hypothesis& hypothesis,
                                                     const std::string& text) const {
    if (is_blank(hypothesis.text)) throw EmptyText("encode_pair: empty hypothesis");
    if (is_blank(text)) throw EmptyText("encode_pair: empty second text");
    auto [h, t] = max_words_ > 0 ? truncate_pair(hypothesis.text, text, max_words_)
                                 : std::make_pair(hypothesis.text, text);
    // 0x1f separator keeps the pair order-sensitive.
    return deterministic_features(h + '\x1f' + t, dim_, seed_);
}

std::pair<std::string, std::string> truncate_pair(const std::string& hypothesis,
                                                  const std::string& text,
                                                  std::size_t max_words) {
    const auto hyp_words = split_words(hypothesis);
    if (hyp_words.size() > max_words) {
        throw TokenBudgetExceeded("encode_pair: hypothesis alone exceeds the sequence budget (" +
                                  std::to_string(hyp_words.size()) + " > " +
                                  std::to_string(max_words) + " words)");
    }
    const auto text_words = split_words(text);
    const std::size_t keep = std::min(text_words.size(), max_words - hyp_words.size());
    return {join_words(hyp_words, hyp_words.size()), join_words(text_words, keep)};
}

FeatureTable FeatureTable::load(const std::string& path, std::size_t expected_dim) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("feature table: cannot open '" + path + "'");
    }
    FeatureTable table;
    table.dim_ = expected_dim;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!row.contains("key") || !row.contains("vector")) {
            throw SchemaError(path + ":" + std::to_string(line_no) +
                              ": feature row needs 'key' and 'vector'");
        }
        std::vector<double> vec = row["vector"].get<std::vector<double>>();
        if (table.dim_ == 0) table.dim_ = vec.size();
        if (vec.size() != table.dim_) {
            throw DimensionMismatch(path + ":" + std::to_string(line_no) + ": vector of size " +
                                    std::to_string(vec.size()) + ", table dim " +
                                    std::to_string(table.dim_));
        }
        for (double v : vec) {
            if (!std::isfinite(v)) {
                throw SchemaError(path + ":" + std::to_string(line_no) + ": non-finite feature");
            }
        }
        table.rows_[row["key"].get<std::string>()] = std::move(vec);
    }
    return table;
}

const std::vector<double>* FeatureTable::find(const std::string& key) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? nullptr : &it->second;
}

FeatureTableVisualEncoder::FeatureTableVisualEncoder(std::string table_path, std::size_t dim)
    : path_(std::move(table_path)), dim_(dim), table_(FeatureTable::load(path_, dim_)) {}

std::string FeatureTableVisualEncoder::id() const {
    return "paper-visual/d" + std::to_string(dim_) + "/" + path_;
}

std::vector<double> FeatureTableVisualEncoder::encode(const ImagePremise& premise) const {
    const auto* vec = table_.find(premise.image_id);
    if (vec == nullptr) {
        throw EncodeError("paper-visual: no precomputed feature for image '" + premise.image_id +
                          "' in " + path_);
    }
    return *vec;
}

FeatureTableTextEncoder::FeatureTableTextEncoder(std::string table_path, std::size_t dim)
    : path_(std::move(table_path)), dim_(dim), table_(FeatureTable::load(path_, dim_)) {}

std::string FeatureTableTextEncoder::id() const {
    return "paper-text/d" + std::to_string(dim_) + "/" + path_;
}

std::string FeatureTableTextEncoder::pair_key(const std::string& hypothesis,
                                              const std::string& text) {
    return hypothesis + '\x1f' + text;
}

std::vector<double> FeatureTableTextEncoder::encode(const Hypothesis& hypothesis,
                                                    const std::string& text) const {
    if (is_blank(hypothesis.text)) throw EmptyText("encode_pair: empty hypothesis");
    if (is_blank(text)) throw EmptyText("encode_pair: empty second text");
    const auto* vec = table_.find(pair_key(hypothesis.text, text));
    if (vec == nullptr) {
        throw EncodeError("paper-text: no precomputed feature for pair ('" + hypothesis.text +
                          "', '" + text + "') in " + path_);
    }
    return *vec;
}

std::shared_ptr<VisualEncoder> make_visual_encoder(const EncoderSpec& spec) {
    if (spec.kind == "test-deterministic") {
        return std::make_shared<DeterministicVisualEncoder>(spec.dim == 0 ? 16 : spec.dim,
                                                            spec.seed);
    }
    if (spec.kind == "paper-visual") {
        if (spec.weights.empty()) {
            throw ConfigError("paper-visual encoder needs a feature-table path in 'weights'");
        }
        return std::make_shared<FeatureTableVisualEncoder>(
            spec.weights, spec.dim == 0 ? kPaperVisualDim : spec.dim);
    }
    throw ConfigError("unknown visual encoder kind: '" + spec.kind + "'");
}

std::shared_ptr<TextPairEncoder> make_text_encoder(const EncoderSpec& spec) {
    if (spec.kind == "test-deterministic") {
        return std::make_shared<DeterministicTextEncoder>(spec.dim == 0 ? 16 : spec.dim, spec.seed,
                                                          spec.max_words);
    }
    if (spec.kind == "paper-text") {
        if (spec.weights.empty()) {
            throw ConfigError("paper-text encoder needs a feature-table path in 'weights'");
        }
        return std::make_shared<FeatureTableTextEncoder>(spec.weights,
                                                         spec.dim == 0 ? kPaperTextDim : spec.dim);
    }
    throw ConfigError("unknown text encoder kind: '" + spec.kind + "'");
}

}  // namespace dve
