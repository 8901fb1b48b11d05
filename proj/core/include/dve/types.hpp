// Shared domain types and the label/sign conventions used by every module.
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "dve/errors.hpp"

namespace dve {

// Update class; sign convention: weakener -> -1, strengthener -> +1.
enum class UpdateLabel { weakener, strengthener };

// Generation goal; maps one-to-one onto UpdateLabel.
enum class Goal { weaken, strengthen };

enum class Split { train, validation, test };

constexpr int label_sign(UpdateLabel label) noexcept {
    return label == UpdateLabel::weakener ? -1 : +1;
}

// Inverse of label_sign; throws on anything outside {-1, +1}.
UpdateLabel label_from_sign(int sign);

constexpr Goal goal_for(UpdateLabel label) noexcept {
    return label == UpdateLabel::weakener ? Goal::weaken : Goal::strengthen;
}

constexpr UpdateLabel label_for(Goal goal) noexcept {
    return goal == Goal::weaken ? UpdateLabel::weakener : UpdateLabel::strengthener;
}

std::string_view to_string(UpdateLabel label) noexcept;
std::string_view to_string(Goal goal) noexcept;
std::string_view to_string(Split split) noexcept;

UpdateLabel update_label_from_string(std::string_view s);
Goal goal_from_string(std::string_view s);
Split split_from_string(std::string_view s);

// Reference to the image premise; pixels are never stored here, decoding
// happens inside encoders.
struct ImagePremise {
    std::string image_id;
    std::string source_path;
    std::optional<int> width;
    std::optional<int> height;

    bool operator==(const ImagePremise&) const = default;
};

struct Hypothesis {
    std::string text;

    bool operator==(const Hypothesis&) const = default;
};

// The source text premise paired with the image; kept on every sample because
// the contrastive pair needs it per training step.
struct Caption {
    std::string text;

    bool operator==(const Caption&) const = default;
};

// Label is absent for model-generated updates awaiting scoring.
struct Update {
    std::string text;
    std::optional<UpdateLabel> label;

    bool operator==(const Update&) const = default;
};

struct DveSample {
    ImagePremise premise;
    Caption caption;
    Hypothesis hypothesis;
    Update update;
    Split split = Split::train;

    bool operator==(const DveSample&) const = default;
};

// Collapses interior whitespace runs and trims the ends.
std::string normalize_whitespace(std::string_view s);

bool is_blank(std::string_view s) noexcept;

}  // namespace dve
