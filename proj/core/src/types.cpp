#include "dve/types.hpp"

#include <cctype>

namespace dve {

UpdateLabel label_from_sign(int sign) {
    if (sign == -1) return UpdateLabel::weakener;
    if (sign == +1) return UpdateLabel::strengthener;
    throw Error("label_from_sign: sign must be -1 or +1, got " + std::to_string(sign));
}

std::string_view to_string(UpdateLabel label) noexcept {
    return label == UpdateLabel::weakener ? "weakener" : "strengthener";
}

std::string_view to_string(Goal goal) noexcept {
    return goal == Goal::weaken ? "weaken" : "strengthen";
}

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        default: return "test";
    }
}

UpdateLabel update_label_from_string(std::string_view s) {
    if (s == "weakener") return UpdateLabel::weakener;
    if (s == "strengthener") return UpdateLabel::strengthener;
    throw Error("unknown update label: '" + std::string(s) + "'");
}

Goal goal_from_string(std::string_view s) {
    if (s == "weaken" || s == "weakener") return Goal::weaken;
    if (s == "strengthen" || s == "strengthener") return Goal::strengthen;
    throw Error("unknown goal: '" + std::string(s) + "'");
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "validation" || s == "dev") return Split::validation;
    if (s == "test") return Split::test;
    throw Error("unknown split: '" + std::string(s) + "'");
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // leading whitespace dropped
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            out.push_back(c);
            in_space = false;
        }
    }
    return out;
}

bool is_blank(std::string_view s) noexcept {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace dve
