// Linear and rank correlations used for meta-evaluating automatic metrics
// against human judgments.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dve/errors.hpp"

namespace dve {

// Sample covariance over the product of standard deviations.
// Throws ConstantInput when either input has zero variance.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Fractional (average) ranks, 1-based; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average-ranked data.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Kendall's tau-b with tie correction, O(n log n) via merge-sort inversion
// counting.
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::optional<double> kendall;

    bool all_defined() const noexcept {
        return pearson.has_value() && spearman.has_value() && kendall.has_value();
    }
};

// Computes all three; coefficients undefined on the input (constant series)
// come back disengaged instead of throwing.
CorrelationReport correlation_report(std::span<const double> x, std::span<const double> y);

}  // namespace dve
