// Corpus construction: join neutral SNLI premise-hypothesis pairs with
// delta-NLI updates, resolve each text premise to its Flickr30k image, and
// persist/verify the result.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dve/types.hpp"

namespace dve {

struct SourceRecordSnli {
    std::string premise_text;
    std::string hypothesis_text;
    std::string label;  // entailment | neutral | contradiction
    std::string caption_id;
};

struct SourceRecordDeltaNli {
    std::string premise_text;
    std::string hypothesis_text;
    std::string update_text;
    UpdateLabel update_type = UpdateLabel::weakener;
    Split split = Split::train;
};

struct SourceRecordFlickr {
    std::string image_id;
    std::vector<std::string> caption_texts;
};

struct DveDataset {
    std::vector<DveSample> samples;

    bool operator==(const DveDataset&) const = default;
};

struct JoinReport {
    std::size_t samples = 0;
    std::size_t pairs_without_update = 0;  // neutral pairs with no delta-NLI update
    std::size_t unresolved_images = 0;     // premise text matched no Flickr caption
    std::size_t non_neutral_skipped = 0;
    std::size_t duplicate_pairs = 0;    // repeated (premise, hypothesis) source rows
    std::size_t malformed_records = 0;  // accumulated by the source readers
};

// Join keys are whitespace-normalized exact string equality on
// (premise, hypothesis); image resolution requires the premise text to appear
// among an image's captions. Pairs without updates are dropped and counted.
DveDataset join_sources(const std::vector<SourceRecordSnli>& snli,
                        const std::vector<SourceRecordDeltaNli>& dnli,
                        const std::vector<SourceRecordFlickr>& flickr,
                        const std::string& image_dir, JoinReport& report);

struct SplitStats {
    std::size_t total_samples = 0;
    std::size_t weakener_count = 0;
    std::size_t strengthener_count = 0;
    double avg_premise_len = 0.0;    // words, whitespace tokenization
    double avg_hypothesis_len = 0.0;
    std::size_t unique_premises = 0;
    std::size_t unique_hypotheses = 0;
    double avg_updates_per_image = 0.0;
    std::size_t unique_images = 0;

    bool empty() const noexcept { return total_samples == 0; }
};

struct DatasetStats {
    SplitStats train;
    SplitStats validation;
    SplitStats test;

    SplitStats& for_split(Split s);
    const SplitStats& for_split(Split s) const;
};

// Deterministic and permutation-invariant over sample order.
DatasetStats compute_stats(const DveDataset& dataset);

struct FieldCheck {
    std::string field;
    double actual = 0.0;
    double expected = 0.0;
    bool exact = false;  // integer fields compare exactly
    bool pass = false;
};

struct StatsReport {
    std::vector<FieldCheck> checks;

    bool all_pass() const noexcept;
};

// Integer counts compared exactly, averages within `avg_tolerance` (absolute).
StatsReport verify_stats(const SplitStats& actual, const SplitStats& expected,
                         double avg_tolerance = 0.05);

// Published statistics of the full corpus (train / validation / test).
DatasetStats reference_dataset_stats();

// One JSON object per line: {"image_id", "image_path", "caption",
// "hypothesis", "update", "update_type", "split"}.
void write_jsonl(const DveDataset& dataset, const std::string& path);
DveDataset read_jsonl(const std::string& path);

// Source readers; malformed records are skipped and counted.
std::vector<SourceRecordSnli> read_snli_jsonl(const std::string& path, std::size_t& malformed);
std::vector<SourceRecordDeltaNli> read_dnli_jsonl(const std::string& path, Split default_split,
                                                  std::size_t& malformed);
// Flickr30k caption file: "<image_id>#<n>\t<caption>" per line.
std::vector<SourceRecordFlickr> read_flickr_captions(const std::string& path,
                                                     std::size_t& malformed);

std::size_t word_count(std::string_view text) noexcept;

}  // namespace dve
