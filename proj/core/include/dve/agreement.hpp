// Fleiss' kappa over multi-rater categorical annotations.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dve/errors.hpp"

namespace dve {

// items x categories counts; every row sums to the same rater count.
class AnnotationMatrix {
public:
    AnnotationMatrix(std::vector<std::vector<std::size_t>> counts);

    std::size_t items() const noexcept { return counts_.size(); }
    std::size_t categories() const noexcept { return counts_.empty() ? 0 : counts_[0].size(); }
    std::size_t raters() const noexcept { return raters_; }
    const std::vector<std::vector<std::size_t>>& counts() const noexcept { return counts_; }

private:
    std::vector<std::vector<std::size_t>> counts_;
    std::size_t raters_ = 0;
};

// kappa = (P_bar - P_e) / (1 - P_e). Throws DegenerateChance when every
// rating falls into one category (P_e = 1).
double fleiss_kappa(const AnnotationMatrix& matrix);

// 5-point human judgment, "weakens a lot" .. "strengthens a lot" mapped to
// {-2, -1, 0, +1, +2} with neutral at 0.
struct HumanScore {
    int value = 0;

    explicit HumanScore(int v);
};

inline constexpr int kHumanScoreMin = -2;
inline constexpr int kHumanScoreMax = +2;

// Per-item rater scores -> counts over the five score categories.
AnnotationMatrix matrix_from_scores(std::span<const std::vector<int>> item_ratings);

// Collapse the five score categories to {weaken (<0), neutral (0),
// strengthen (>0)}; the agreement report carries both granularities.
AnnotationMatrix collapse_to_polarity(const AnnotationMatrix& five_way);

}  // namespace dve
