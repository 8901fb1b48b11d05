#include "dve/agreement.hpp"

#include <string>

namespace dve {

AnnotationMatrix::AnnotationMatrix(std::vector<std::vector<std::size_t>> counts)
    : counts_(std::move(counts)) {
    if (counts_.size() < 2) {
        throw EmptyInput("AnnotationMatrix: need at least 2 items");
    }
    const std::size_t categories = counts_[0].size();
    if (categories < 2) {
        throw EmptyInput("AnnotationMatrix: need at least 2 categories");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i].size() != categories) {
            throw LengthMismatch("AnnotationMatrix: row " + std::to_string(i) + " has " +
                                 std::to_string(counts_[i].size()) + " categories, expected " +
                                 std::to_string(categories));
        }
        std::size_t row_sum = 0;
        for (std::size_t c : counts_[i]) row_sum += c;
        if (i == 0) {
            raters_ = row_sum;
        } else if (row_sum != raters_) {
            throw LengthMismatch("AnnotationMatrix: row " + std::to_string(i) + " sums to " +
                                 std::to_string(row_sum) + ", expected " +
                                 std::to_string(raters_) + " raters");
        }
    }
    if (raters_ < 2) {
        throw EmptyInput("AnnotationMatrix: need at least 2 raters");
    }
}

double fleiss_kappa(const AnnotationMatrix& matrix) {
    const auto& counts = matrix.counts();
    const double n = static_cast<double>(matrix.raters());
    const double items = static_cast<double>(matrix.items());

    double observed_sum = 0.0;
    std::vector<double> category_total(matrix.categories(), 0.0);
    for (const auto& row : counts) {
        double sq = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double c = static_cast<double>(row[j]);
            sq += c * c;
            category_total[j] += c;
        }
        observed_sum += (sq - n) / (n * (n - 1.0));
    }
    const double p_bar = observed_sum / items;

    double p_e = 0.0;
    for (double total : category_total) {
        const double p_j = total / (items * n);
        p_e += p_j * p_j;
    }
    if (p_e >= 1.0) {
        throw DegenerateChance("fleiss_kappa: all ratings in one category, kappa undefined");
    }
    return (p_bar - p_e) / (1.0 - p_e);
}

HumanScore::HumanScore(int v) : value(v) {
    if (v < kHumanScoreMin || v > kHumanScoreMax) {
        throw Error("HumanScore: value " + std::to_string(v) + " outside [" +
                    std::to_string(kHumanScoreMin) + ", " + std::to_string(kHumanScoreMax) + "]");
    }
}

AnnotationMatrix matrix_from_scores(std::span<const std::vector<int>> item_ratings) {
    std::vector<std::vector<std::size_t>> counts;
    counts.reserve(item_ratings.size());
    for (const auto& ratings : item_ratings) {
        std::vector<std::size_t> row(5, 0);
        for (int r : ratings) {
            HumanScore checked(r);  // validates the range
            ++row[static_cast<std::size_t>(checked.value - kHumanScoreMin)];
        }
        counts.push_back(std::move(row));
    }
    return AnnotationMatrix(std::move(counts));
}

AnnotationMatrix collapse_to_polarity(const AnnotationMatrix& five_way) {
    if (five_way.categories() != 5) {
        throw LengthMismatch("collapse_to_polarity: expected 5 categories, got " +
                             std::to_string(five_way.categories()));
    }
    std::vector<std::vector<std::size_t>> counts;
    counts.reserve(five_way.items());
    for (const auto& row : five_way.counts()) {
        counts.push_back({row[0] + row[1], row[2], row[3] + row[4]});
    }
    return AnnotationMatrix(std::move(counts));
}

}  // namespace dve
