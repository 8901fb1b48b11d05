#include "doctest.h"

#include <cmath>
#include <random>

#include "dve/correlation.hpp"

using namespace dve;

namespace {

// O(n^2) pair enumeration: the independent route for tau-b.
double kendall_brute_force(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    long long concordant = 0;
    long long discordant = 0;
    long long tied_x = 0;
    long long tied_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) {
                ++tied_x;
                ++tied_y;
            } else if (dx == 0.0) {
                ++tied_x;
            } else if (dy == 0.0) {
                ++tied_y;
            } else if (dx * dy > 0.0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
    const double denom_x = static_cast<double>(n0 - tied_x);
    const double denom_y = static_cast<double>(n0 - tied_y);
    return static_cast<double>(concordant - discordant) / std::sqrt(denom_x * denom_y);
}

// Ranks by direct counting: 1 + #smaller + (#equal - 1) / 2.
std::vector<double> ranks_by_counting(std::span<const double> values) {
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::size_t smaller = 0;
        std::size_t equal = 0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (values[j] < values[i]) ++smaller;
            if (values[j] == values[i]) ++equal;
        }
        ranks[i] = 1.0 + static_cast<double>(smaller) +
                   (static_cast<double>(equal) - 1.0) / 2.0;
    }
    return ranks;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, int distinct_values) {
    // Small value pool forces ties.
    std::uniform_int_distribution<int> pick(0, distinct_values - 1);
    std::vector<double> out(n);
    for (auto& v : out) v = static_cast<double>(pick(rng));
    return out;
}

bool is_constant(std::span<const double> v) {
    for (double x : v) {
        if (x != v.front()) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("correlation") {

TEST_CASE("pearson endpoints") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> neg{-1.0, -2.0, -3.0, -4.0};
    CHECK(pearson_r(x, x) == doctest::Approx(1.0));
    CHECK(pearson_r(x, neg) == doctest::Approx(-1.0));
}

TEST_CASE("pearson worked example: (1,2,3,4) vs (1,3,2,4)") {
    // covariance 4/4, variances 5/4 each -> r = 4/5
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> y{1.0, 3.0, 2.0, 4.0};
    CHECK(pearson_r(x, y) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pearson rejects constant input") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> c{5.0, 5.0, 5.0};
    CHECK_THROWS_AS(pearson_r(x, c), ConstantInput);
    CHECK_THROWS_AS(pearson_r(c, x), ConstantInput);
    CHECK_THROWS_AS(pearson_r(std::vector<double>{1.0}, std::vector<double>{1.0}), EmptyInput);
    CHECK_THROWS_AS(pearson_r(x, std::vector<double>{1.0, 2.0}), LengthMismatch);
}

TEST_CASE("pearson is invariant under positive affine transforms") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    std::uniform_real_distribution<double> scale(0.1, 4.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(12);
        std::vector<double> y(12);
        for (auto& v : x) v = value(rng);
        for (auto& v : y) v = value(rng);
        const double a = scale(rng);
        const double b = value(rng);
        std::vector<double> x2(12);
        for (std::size_t i = 0; i < x.size(); ++i) x2[i] = a * x[i] + b;
        CHECK(pearson_r(x, y) == doctest::Approx(pearson_r(x2, y)).epsilon(1e-9));
    }
}

TEST_CASE("monotone transforms give rank correlation 1") {
    const std::vector<double> x{-2.0, -1.0, 0.5, 1.0, 3.0};
    std::vector<double> cubed;
    for (double v : x) cubed.push_back(v * v * v);
    CHECK(spearman_rho(x, cubed) == doctest::Approx(1.0));
    CHECK(kendall_tau(x, cubed) == doctest::Approx(1.0));

    std::vector<double> anti;
    for (double v : x) anti.push_back(-v * v * v);
    CHECK(spearman_rho(x, anti) == doctest::Approx(-1.0));
    CHECK(kendall_tau(x, anti) == doctest::Approx(-1.0));
}

TEST_CASE("average ranks handle ties with fractional ranks") {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
    CHECK(average_ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("kendall tau with one tie matches pair enumeration") {
    const std::vector<double> x{1.0, 1.0, 2.0, 3.0};
    const std::vector<double> y{1.0, 2.0, 3.0, 4.0};
    CHECK(kendall_tau(x, y) == kendall_brute_force(x, y));
}

TEST_CASE("kendall tau equals the brute-force oracle on 200 random vectors") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> size(2, 50);
    int checked = 0;
    while (checked < 200) {
        const std::size_t n = size(rng);
        const auto x = random_vector(rng, n, 6);
        const auto y = random_vector(rng, n, 6);
        if (is_constant(x) || is_constant(y)) continue;
        CHECK(kendall_tau(x, y) == kendall_brute_force(x, y));  // exact equality
        ++checked;
    }
}

TEST_CASE("spearman equals pearson on counting-ranks") {
    std::mt19937_64 rng(78);
    std::uniform_int_distribution<std::size_t> size(2, 40);
    int checked = 0;
    while (checked < 100) {
        const std::size_t n = size(rng);
        const auto x = random_vector(rng, n, 5);
        const auto y = random_vector(rng, n, 5);
        const auto rx = ranks_by_counting(x);
        const auto ry = ranks_by_counting(y);
        if (is_constant(rx) || is_constant(ry)) continue;
        CHECK(average_ranks(x) == rx);  // same fractional ranks, exactly
        CHECK(spearman_rho(x, y) == pearson_r(rx, ry));
        ++checked;
    }
}

TEST_CASE("rank correlations are invariant under strictly increasing transforms") {
    std::mt19937_64 rng(79);
    for (int t = 0; t < 50; ++t) {
        const auto x = random_vector(rng, 20, 8);
        const auto y = random_vector(rng, 20, 8);
        if (is_constant(x) || is_constant(y)) continue;
        std::vector<double> warped;
        for (double v : x) warped.push_back(std::exp(v / 3.0));  // strictly increasing
        CHECK(spearman_rho(x, y) == doctest::Approx(spearman_rho(warped, y)).epsilon(1e-12));
        CHECK(kendall_tau(x, y) == doctest::Approx(kendall_tau(warped, y)).epsilon(1e-12));
    }
}

TEST_CASE("all correlations stay in [-1, 1]") {
    std::mt19937_64 rng(80);
    for (int t = 0; t < 200; ++t) {
        const auto x = random_vector(rng, 15, 4);
        const auto y = random_vector(rng, 15, 4);
        if (is_constant(x) || is_constant(y)) continue;
        for (double value : {pearson_r(x, y), spearman_rho(x, y), kendall_tau(x, y)}) {
            CHECK(value >= -1.0 - 1e-12);
            CHECK(value <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("correlation_report flags undefined coefficients") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> c{4.0, 4.0, 4.0};
    const CorrelationReport defined = correlation_report(x, x);
    CHECK(defined.all_defined());
    CHECK(*defined.pearson == doctest::Approx(1.0));

    const CorrelationReport undefined = correlation_report(x, c);
    CHECK_FALSE(undefined.all_defined());
    CHECK_FALSE(undefined.pearson.has_value());
    CHECK_FALSE(undefined.spearman.has_value());
    CHECK_FALSE(undefined.kendall.has_value());
}

}  // TEST_SUITE
