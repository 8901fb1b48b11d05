#include "dve/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

namespace dve {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y, const char* what) {
    if (x.size() != y.size()) {
        throw LengthMismatch(std::string(what) + ": " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()) + " values");
    }
    if (x.size() < 2) {
        throw EmptyInput(std::string(what) + ": need at least 2 observations");
    }
}

// Strict inversions (a[i] > a[j], i < j) via merge sort; equal keys are not
// inversions.
std::uint64_t count_inversions(std::vector<double>& a, std::vector<double>& scratch,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t count = count_inversions(a, scratch, lo, mid) +
                          count_inversions(a, scratch, mid, hi);
    std::size_t i = lo;
    std::size_t j = mid;
    std::size_t k = lo;
    while (i < mid && j < hi) {
        if (a[j] < a[i]) {
            count += mid - i;
            scratch[k++] = a[j++];
        } else {
            scratch[k++] = a[i++];
        }
    }
    while (i < mid) scratch[k++] = a[i++];
    while (j < hi) scratch[k++] = a[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              a.begin() + static_cast<std::ptrdiff_t>(lo));
    return count;
}

// Sum over equal-value runs of g*(g-1)/2, assuming `sorted` is ascending.
template <typename Iter, typename Equal>
std::uint64_t tied_pairs(Iter begin, Iter end, Equal equal) {
    std::uint64_t total = 0;
    auto run_start = begin;
    for (auto it = begin; it != end; ++it) {
        if (it != run_start && !equal(*run_start, *it)) {
            const std::uint64_t g = static_cast<std::uint64_t>(it - run_start);
            total += g * (g - 1) / 2;
            run_start = it;
        }
    }
    const std::uint64_t g = static_cast<std::uint64_t>(end - run_start);
    total += g * (g - 1) / 2;
    return total;
}

}  // namespace

double pearson_r(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y, "pearson_r");
    const double n = static_cast<double>(x.size());
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw ConstantInput("pearson_r: constant input, correlation undefined");
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) share the average 1-based rank
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y, "spearman_rho");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    try {
        return pearson_r(rx, ry);
    } catch (const ConstantInput&) {
        throw ConstantInput("spearman_rho: constant input, correlation undefined");
    }
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y, "kendall_tau");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;

    // Pairs tied in x, and tied in both, from the (x, y)-sorted order.
    std::uint64_t n1 = 0;
    std::uint64_t n3 = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
            const std::uint64_t g = j - i + 1;
            n1 += g * (g - 1) / 2;
            std::size_t a = i;
            while (a <= j) {
                std::size_t b = a;
                while (b + 1 <= j && y[order[b + 1]] == y[order[a]]) ++b;
                const std::uint64_t h = b - a + 1;
                n3 += h * (h - 1) / 2;
                a = b + 1;
            }
            i = j + 1;
        }
    }

    std::uint64_t n2 = 0;
    {
        std::vector<double> ys(y.begin(), y.end());
        std::sort(ys.begin(), ys.end());
        n2 = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });
    }

    std::vector<double> y_in_x_order(n);
    for (std::size_t i = 0; i < n; ++i) y_in_x_order[i] = y[order[i]];
    std::vector<double> scratch(n);
    const std::uint64_t swaps = count_inversions(y_in_x_order, scratch, 0, n);

    // Knight's identity: C - D = n0 - n1 - n2 + n3 - 2 * swaps.
    const double concordant_minus_discordant =
        static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
        static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
    const double denom_x = static_cast<double>(n0 - n1);
    const double denom_y = static_cast<double>(n0 - n2);
    if (denom_x == 0.0 || denom_y == 0.0) {
        throw ConstantInput("kendall_tau: constant input, correlation undefined");
    }
    return concordant_minus_discordant / std::sqrt(denom_x * denom_y);
}

CorrelationReport correlation_report(std::span<const double> x, std::span<const double> y) {
    CorrelationReport report;
    try {
        report.pearson = pearson_r(x, y);
    } catch (const ConstantInput&) {
    }
    try {
        report.spearman = spearman_rho(x, y);
    } catch (const ConstantInput&) {
    }
    try {
        report.kendall = kendall_tau(x, y);
    } catch (const ConstantInput&) {
    }
    return report;
}

}  // namespace dve
