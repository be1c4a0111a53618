#include <doctest.h>

#include "generators.hpp"

#include <npmle/errors.hpp>
#include <npmle/models.hpp>
#include <npmle/theory.hpp>
#include <npmle/training.hpp>

#include <cmath>
#include <numbers>

using namespace npmle;

namespace {
doctest::Approx rel(double v) { return doctest::Approx(v).epsilon(1e-9); }
} // namespace

// Frozen outputs of tests/oracles/theory_oracles.py.
TEST_CASE("covering bound oracle") {
    CHECK(covering_bound_dnn(0.1, 2, 5, 1, 10) == rel(101.62770150466210941));
    CHECK(covering_bound_dnn(0.1, 2, 5, 0.3, 10) == rel(101.62770150466210941));
    CHECK(covering_bound_dnn(0.05, 3, 7, 4, 25) == rel(622.2189994755114978));
}

TEST_CASE("entropy integral oracle and bound on the integral") {
    CHECK(entropy_integral_bound(0.1, 10, 2, 1) == rel(2.0807034257172019814));
    CHECK(entropy_integral_bound(0.2, 50, 3, 5) == rel(12.354983167863409944));
    // The closed form dominates the integral it bounds.
    CHECK(entropy_integral_bound(0.1, 10, 2, 1) >= 1.1383681410188760923);
    CHECK_THROWS_AS(entropy_integral_bound(1.0, 10, 2, 1), ArgumentError);
}

TEST_CASE("critical radius oracle") {
    CHECK(critical_radius(100, 5, std::numbers::e, 1e4) == rel(1.5413423047613960287));
    CHECK(critical_radius(30, 2, 3, 500) == rel(2.2326909701538036389));
    CHECK_THROWS_AS(critical_radius(30, 2, 0.01, 100), ArgumentError);
}

TEST_CASE("oracle rhs oracle") {
    CHECK(oracle_rhs(1, 0.1, 0.01, 1e3, 1) == rel(20.561));
    CHECK(oracle_rhs(2.5, 0.03, 0.002, 5e3, 2) == rel(5.2187));
}

TEST_CASE("A constant oracle") {
    std::vector<double> b1{1.0};
    std::vector<std::size_t> t1{1};
    CHECK(A_constant(2, 1, 1, 1, 2, b1, t1) == rel(8.0));
    CHECK(A_constant(3, 1, 1, 1, 2, b1, t1) == rel(19.595917942265424786));
    std::vector<double> b2{0.75, 1.0};
    std::vector<std::size_t> t2{1, 2};
    CHECK(A_constant(3, 2.5, 8, 4, 16, b2, t2) == rel(1763.6326148038882307));
    CHECK_THROWS_AS(A_constant(3, 2.5, 8, 4, 1, b2, t2), ArgumentError);
}

TEST_CASE("bracketing from covering rescales delta") {
    auto cov = [](double d) { return covering_bound_dnn(d, 2, 5, 1, 10); };
    CHECK(bracketing_from_covering(0.2, 2, 4, cov) == rel(cov(0.2 / (2.0 * 2.0))));
}

TEST_CASE("besov oracle") {
    std::vector<double> a{1, 1}, b{2, 2}, c{1, 2, 4};
    CHECK(besov_effective(a).tilde == rel(0.5));
    CHECK(besov_effective(b).tilde == rel(1.0));
    CHECK(besov_effective(c).tilde == rel(0.57142857142857142857));
    CHECK(besov_effective(c).bar == 4.0);
    CHECK(besov_rate(4.0 / 7.0, 1000) == rel(0.012328467394420661391));
}

TEST_CASE("architecture prescription oracle") {
    CompositionSpec s{0, {1, 2}, {1}, {1.0}, 1.0, 2};
    ArchSpec a = architecture_from_theory(s, 1024);
    CHECK(a.L == 7);
    CHECK(a.widths == std::vector<std::size_t>{1, 6, 6, 6, 6, 6, 6, 6, 2});
    CHECK(a.B == rel(1048576.0));
    CHECK(architecture_from_theory(s, 2048).L - a.L <= 1);
}

TEST_CASE("svb and K rates") {
    CompositionSpec s{0, {1, 2}, {1}, {1.0}, 1.0, 2};
    CHECK(svb_rate(0.0, s, 1e4) == rel(rate_phi_n(s, 1e4).value));
    CHECK(svb_rate(1.0, s, 1e4) < rate_phi_n(s, 1e4).value);
    CHECK(k_rate(s, 1e4, 3) > k_rate(s, 1e4, 2));
}

TEST_CASE("assumption ratio detects violations") {
    ConditionalProbability eta = [](std::span<const double> x) { return std::vector<double>{x[0], 1 - x[0]}; };
    ConditionalProbability pt = [](std::span<const double>) { return std::vector<double>{0.5, 0.5}; };
    AssumptionReport r = assumption_ratio(eta, pt, probe_grid(1, 11));
    CHECK(r.c0_sq == doctest::Approx(2.0));
    CHECK_FALSE(r.violated);
    ConditionalProbability hard = [](std::span<const double>) { return std::vector<double>{1.0, 0.0}; };
    AssumptionReport v = assumption_ratio(eta, hard, probe_grid(1, 11));
    CHECK(v.violated);
    CHECK(v.c0_sq == INFINITY);
    CHECK(probe_grid(2, 5).size() == 25);
}

TEST_CASE("theory pipeline composes to phi_n log^3 n") {
    std::vector<double> ns{1e4, 1e5, 1e6, 1e7, 1e8};
    auto slope = [&](const CompositionSpec& s) {
        std::vector<double> rhs;
        for (double n : ns) {
            rhs.push_back(theory_pipeline(s, n).rhs / std::pow(std::log(n), 3));
        }
        return loglog_slope(ns, rhs);
    };
    CompositionSpec gam = make_model("stock_gam").spec();
    CHECK(std::fabs(slope(gam) - (-0.5)) < 0.1);
    CompositionSpec smooth{0, {1, 2}, {1}, {2.0}, 1.0, 2};
    CHECK(std::fabs(slope(smooth) - (-2.0 / 3.0)) < 0.1);
}

TEST_CASE("basic inequality for constant models") {
    RandomStream s(31, "test.basic");
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t K = 2 + s.uniform_index(3);
        std::vector<double> eta = gen::simplex(s, K);
        std::vector<std::vector<double>> cand;
        for (int j = 0; j < 6; ++j) {
            cand.push_back(gen::simplex(s, K));
        }
        std::vector<std::size_t> labels(50);
        for (auto& y : labels) {
            y = s.categorical(eta);
        }
        BasicInequalityCheck b = basic_inequality_constant(cand, 0, eta, labels);
        REQUIRE(b.holds());
    }
}
