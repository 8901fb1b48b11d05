#include "dve/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace dve {

namespace {

std::string join_key(std::string_view premise, std::string_view hypothesis) {
    return normalize_whitespace(premise) + '\x1f' + normalize_whitespace(hypothesis);
}

std::string image_path_for(const std::string& image_dir, const std::string& image_id) {
    if (image_dir.empty()) return image_id;
    if (image_dir.back() == '/') return image_dir + image_id;
    return image_dir + "/" + image_id;
}

// Picks a field from a JSON object under any of the candidate names; the
// readers accept both this toolkit's snake_case keys and the upstream
// datasets' original field names.
const nlohmann::json* find_field(const nlohmann::json& obj,
                                 std::initializer_list<const char*> names) {
    for (const char* name : names) {
        auto it = obj.find(name);
        if (it != obj.end()) return &*it;
    }
    return nullptr;
}

}  // namespace

std::size_t word_count(std::string_view text) noexcept {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

DveDataset join_sources(const std::vector<SourceRecordSnli>& snli,
                        const std::vector<SourceRecordDeltaNli>& dnli,
                        const std::vector<SourceRecordFlickr>& flickr,
                        const std::string& image_dir, JoinReport& report) {
    // Normalized caption text -> image id. Duplicate captions across images
    // resolve to the lexicographically smallest id for determinism.
    std::unordered_map<std::string, std::string> caption_to_image;
    for (const auto& rec : flickr) {
        for (const auto& caption : rec.caption_texts) {
            const std::string key = normalize_whitespace(caption);
            auto it = caption_to_image.find(key);
            if (it == caption_to_image.end() || rec.image_id < it->second) {
                caption_to_image[key] = rec.image_id;
            }
        }
    }

    std::unordered_map<std::string, std::vector<const SourceRecordDeltaNli*>> updates_by_pair;
    for (const auto& rec : dnli) {
        updates_by_pair[join_key(rec.premise_text, rec.hypothesis_text)].push_back(&rec);
    }

    DveDataset out;
    std::unordered_set<std::string> seen_pairs;
    for (const auto& pair : snli) {
        if (pair.label != "neutral") {
            ++report.non_neutral_skipped;
            continue;
        }
        // A pair repeated in the source must not duplicate its updates.
        if (!seen_pairs.insert(join_key(pair.premise_text, pair.hypothesis_text)).second) {
            ++report.duplicate_pairs;
            continue;
        }
        auto updates = updates_by_pair.find(join_key(pair.premise_text, pair.hypothesis_text));
        if (updates == updates_by_pair.end() || updates->second.empty()) {
            ++report.pairs_without_update;
            continue;
        }
        const std::string premise_norm = normalize_whitespace(pair.premise_text);
        auto image = caption_to_image.find(premise_norm);
        if (image == caption_to_image.end()) {
            ++report.unresolved_images;
            continue;
        }
        for (const SourceRecordDeltaNli* upd : updates->second) {
            DveSample sample;
            sample.premise.image_id = image->second;
            sample.premise.source_path = image_path_for(image_dir, image->second);
            sample.caption.text = pair.premise_text;
            sample.hypothesis.text = pair.hypothesis_text;
            sample.update.text = upd->update_text;
            sample.update.label = upd->update_type;
            sample.split = upd->split;
            out.samples.push_back(std::move(sample));
            ++report.samples;
        }
    }
    return out;
}

SplitStats& DatasetStats::for_split(Split s) {
    switch (s) {
        case Split::train: return train;
        case Split::validation: return validation;
        default: return test;
    }
}

const SplitStats& DatasetStats::for_split(Split s) const {
    return const_cast<DatasetStats*>(this)->for_split(s);
}

DatasetStats compute_stats(const DveDataset& dataset) {
    struct Accumulator {
        std::size_t total = 0;
        std::size_t weakeners = 0;
        std::size_t premise_words = 0;
        std::size_t hypothesis_words = 0;
        std::unordered_set<std::string> premises;
        std::unordered_set<std::string> hypotheses;
        std::unordered_set<std::string> images;
    };
    std::map<Split, Accumulator> acc;
    for (const auto& sample : dataset.samples) {
        auto& a = acc[sample.split];
        ++a.total;
        if (sample.update.label == UpdateLabel::weakener) ++a.weakeners;
        a.premise_words += word_count(sample.caption.text);
        a.hypothesis_words += word_count(sample.hypothesis.text);
        a.premises.insert(sample.caption.text);
        a.hypotheses.insert(sample.hypothesis.text);
        a.images.insert(sample.premise.image_id);
    }

    DatasetStats stats;
    for (auto& [split, a] : acc) {
        SplitStats& s = stats.for_split(split);
        s.total_samples = a.total;
        s.weakener_count = a.weakeners;
        s.strengthener_count = a.total - a.weakeners;
        if (a.total > 0) {
            s.avg_premise_len = static_cast<double>(a.premise_words) / a.total;
            s.avg_hypothesis_len = static_cast<double>(a.hypothesis_words) / a.total;
        }
        s.unique_premises = a.premises.size();
        s.unique_hypotheses = a.hypotheses.size();
        s.unique_images = a.images.size();
        if (!a.images.empty()) {
            s.avg_updates_per_image = static_cast<double>(a.total) / a.images.size();
        }
    }
    return stats;
}

bool StatsReport::all_pass() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const FieldCheck& c) { return c.pass; });
}

StatsReport verify_stats(const SplitStats& actual, const SplitStats& expected,
                         double avg_tolerance) {
    StatsReport report;
    auto exact = [&](const char* name, std::size_t a, std::size_t e) {
        report.checks.push_back({name, static_cast<double>(a), static_cast<double>(e), true,
                                 a == e});
    };
    auto close = [&](const char* name, double a, double e) {
        report.checks.push_back({name, a, e, false, std::fabs(a - e) <= avg_tolerance});
    };
    exact("total_samples", actual.total_samples, expected.total_samples);
    exact("weakener_count", actual.weakener_count, expected.weakener_count);
    exact("strengthener_count", actual.strengthener_count, expected.strengthener_count);
    close("avg_premise_len", actual.avg_premise_len, expected.avg_premise_len);
    close("avg_hypothesis_len", actual.avg_hypothesis_len, expected.avg_hypothesis_len);
    exact("unique_premises", actual.unique_premises, expected.unique_premises);
    exact("unique_hypotheses", actual.unique_hypotheses, expected.unique_hypotheses);
    close("avg_updates_per_image", actual.avg_updates_per_image, expected.avg_updates_per_image);
    exact("unique_images", actual.unique_images, expected.unique_images);
    return report;
}

DatasetStats reference_dataset_stats() {
    DatasetStats stats;
    stats.train = {93082, 46541, 46541, 12.83, 8.27, 9293, 9438, 9.79, 9507};
    stats.validation = {1888, 944, 944, 13.82, 8.41, 191, 195, 9.68, 195};
    stats.test = {1972, 986, 986, 13.21, 8.23, 200, 203, 9.71, 203};
    return stats;
}

void write_jsonl(const DveDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("write_jsonl: cannot open '" + path + "' for writing");
    }
    for (const auto& sample : dataset.samples) {
        if (!sample.update.label.has_value()) {
            throw SchemaError("write_jsonl: corpus sample without update label (hypothesis '" +
                              sample.hypothesis.text + "')");
        }
        nlohmann::json row{
            {"image_id", sample.premise.image_id},
            {"image_path", sample.premise.source_path},
            {"caption", sample.caption.text},
            {"hypothesis", sample.hypothesis.text},
            {"update", sample.update.text},
            {"update_type", to_string(*sample.update.label)},
            {"split", to_string(sample.split)},
        };
        out << row.dump() << '\n';
    }
    if (!out) {
        throw IoError("write_jsonl: write to '" + path + "' failed");
    }
}

DveDataset read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("read_jsonl: cannot open '" + path + "'");
    }
    DveDataset dataset;
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
        for (const char* key :
             {"image_id", "image_path", "caption", "hypothesis", "update", "update_type",
              "split"}) {
            if (!row.contains(key) || !row[key].is_string()) {
                throw SchemaError(path + ":" + std::to_string(line_no) + ": missing field '" +
                                  key + "'");
            }
        }
        DveSample sample;
        sample.premise.image_id = row["image_id"].get<std::string>();
        sample.premise.source_path = row["image_path"].get<std::string>();
        sample.caption.text = row["caption"].get<std::string>();
        sample.hypothesis.text = row["hypothesis"].get<std::string>();
        sample.update.text = row["update"].get<std::string>();
        for (const auto& [field, value] :
             {std::pair<const char*, const std::string*>{"image_id", &sample.premise.image_id},
              {"caption", &sample.caption.text},
              {"hypothesis", &sample.hypothesis.text},
              {"update", &sample.update.text}}) {
            if (is_blank(*value)) {
                throw SchemaError(path + ":" + std::to_string(line_no) + ": blank field '" +
                                  field + "'");
            }
        }
        try {
            sample.update.label = update_label_from_string(row["update_type"].get<std::string>());
            sample.split = split_from_string(row["split"].get<std::string>());
        } catch (const Error& e) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        dataset.samples.push_back(std::move(sample));
    }
    return dataset;
}

std::vector<SourceRecordSnli> read_snli_jsonl(const std::string& path, std::size_t& malformed) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("read_snli_jsonl: cannot open '" + path + "'");
    }
    std::vector<SourceRecordSnli> records;
    std::string line;
    while (std::getline(in, line)) {
        if (is_blank(line)) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            ++malformed;
            continue;
        }
        const auto* premise = find_field(row, {"premise", "sentence1"});
        const auto* hypothesis = find_field(row, {"hypothesis", "sentence2"});
        const auto* label = find_field(row, {"label", "gold_label"});
        if (premise == nullptr || hypothesis == nullptr || label == nullptr ||
            !premise->is_string() || !hypothesis->is_string() || !label->is_string()) {
            ++malformed;
            continue;
        }
        SourceRecordSnli rec;
        rec.premise_text = premise->get<std::string>();
        rec.hypothesis_text = hypothesis->get<std::string>();
        rec.label = label->get<std::string>();
        if (const auto* cap = find_field(row, {"caption_id", "captionID"}); cap != nullptr &&
            cap->is_string()) {
            rec.caption_id = cap->get<std::string>();
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SourceRecordDeltaNli> read_dnli_jsonl(const std::string& path, Split default_split,
                                                  std::size_t& malformed) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("read_dnli_jsonl: cannot open '" + path + "'");
    }
    std::vector<SourceRecordDeltaNli> records;
    std::string line;
    while (std::getline(in, line)) {
        if (is_blank(line)) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            ++malformed;
            continue;
        }
        const auto* premise = find_field(row, {"premise", "Premise", "sentence1"});
        const auto* hypothesis = find_field(row, {"hypothesis", "Hypothesis", "sentence2"});
        const auto* update = find_field(row, {"update", "Update"});
        const auto* update_type = find_field(row, {"update_type", "UpdateType"});
        if (premise == nullptr || hypothesis == nullptr || update == nullptr ||
            update_type == nullptr || !premise->is_string() || !hypothesis->is_string() ||
            !update->is_string() || !update_type->is_string()) {
            ++malformed;
            continue;
        }
        SourceRecordDeltaNli rec;
        rec.premise_text = premise->get<std::string>();
        rec.hypothesis_text = hypothesis->get<std::string>();
        rec.update_text = update->get<std::string>();
        try {
            rec.update_type = update_label_from_string(update_type->get<std::string>());
            const auto* split = find_field(row, {"split"});
            rec.split = (split != nullptr && split->is_string())
                            ? split_from_string(split->get<std::string>())
                            : default_split;
        } catch (const Error&) {
            ++malformed;
            continue;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SourceRecordFlickr> read_flickr_captions(const std::string& path,
                                                     std::size_t& malformed) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("read_flickr_captions: cannot open '" + path + "'");
    }
    std::map<std::string, std::vector<std::string>> captions;
    std::string line;
    while (std::getline(in, line)) {
        if (is_blank(line)) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            ++malformed;
            continue;
        }
        std::string key = line.substr(0, tab);
        // "1000092795.jpg#0" -> "1000092795.jpg"
        if (const auto hash = key.rfind('#'); hash != std::string::npos) {
            key = key.substr(0, hash);
        }
        std::string caption = line.substr(tab + 1);
        if (key.empty() || is_blank(caption)) {
            ++malformed;
            continue;
        }
        captions[key].push_back(std::move(caption));
    }
    std::vector<SourceRecordFlickr> records;
    records.reserve(captions.size());
    for (auto& [image_id, texts] : captions) {
        records.push_back({image_id, std::move(texts)});
    }
    return records;
}

}  // namespace dve
