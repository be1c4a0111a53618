#include <doctest.h>

#include "generators.hpp"

#include <npmle/errors.hpp>
#include <npmle/input_law.hpp>
#include <npmle/metrics.hpp>
#include <npmle/theory.hpp>

#include <cmath>
#include <numbers>

using namespace npmle;

namespace {
std::span<const double> sp(const std::vector<double>& v) { return v; }
} // namespace

TEST_CASE("simplex vectors validate their input") {
    CHECK_NOTHROW(SimplexVector{0.5, 0.5});
    CHECK_THROWS_AS(SimplexVector({0.6, 0.6}), DataError);
    CHECK_THROWS_AS(SimplexVector({1.1, -0.1}), DataError);
    SimplexVector tiny({1.0 + 5e-10, -5e-10});
    CHECK(tiny[1] == 0.0);
    CHECK_THROWS_AS(SimplexVector::midpoint(SimplexVector::uniform(2), SimplexVector::uniform(3)), ArgumentError);
}

TEST_CASE("hellinger examples") {
    CHECK(hellinger_sq(SimplexVector{1.0, 0.0}, SimplexVector{0.0, 1.0}) == doctest::Approx(1.0));
    CHECK(hellinger_sq(SimplexVector{0.3, 0.7}, SimplexVector{0.3, 0.7}) == 0.0);
    double expect = 1.0 - (std::sqrt(0.5 * 0.25) + std::sqrt(0.5 * 0.75));
    CHECK(hellinger_sq(SimplexVector{0.5, 0.5}, SimplexVector{0.25, 0.75}) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("kl examples and sentinel") {
    CHECK(kl(SimplexVector{0.5, 0.5}, SimplexVector{0.5, 0.5}) == 0.0);
    CHECK(kl(SimplexVector{0.5, 0.5}, SimplexVector{1.0, 0.0}) == KL_INFINITY);
    CHECK(kl(SimplexVector{1.0, 0.0}, SimplexVector{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
    CHECK(truncated_kl(SimplexVector{0.5, 0.5}, SimplexVector{1.0, 0.0}, 3.0) < INFINITY);
    CHECK_THROWS_AS(truncated_kl(SimplexVector{0.5, 0.5}, SimplexVector{0.5, 0.5}, 0.0), ArgumentError);
}

TEST_CASE("distance inequalities on random simplex pairs") {
    RandomStream s(11, "test.metrics");
    for (std::size_t K : {2u, 5u, 10u}) {
        for (int i = 0; i < 5000; ++i) {
            auto p = gen::simplex(s, K, 0.1), q = gen::simplex(s, K, 0.1);
            double h = hellinger_sq(sp(p), sp(q));
            double k = kl(sp(p), sp(q));
            REQUIRE(h >= -1e-12);
            REQUIRE(h <= 1.0 + 1e-12);
            REQUIRE(std::fabs(h - hellinger_sq(sp(q), sp(p))) <= 1e-12);
            REQUIRE(2.0 * h <= k + 1e-12);
            double b1 = truncated_kl(sp(p), sp(q), 1.0), b2 = truncated_kl(sp(p), sp(q), 2.0);
            REQUIRE(b1 <= b2 + 1e-12);
            REQUIRE(b2 <= k + 1e-12);
            std::vector<double> mid(K);
            for (std::size_t j = 0; j < K; ++j) {
                mid[j] = 0.5 * (p[j] + q[j]);
            }
            REQUIRE(h <= 16.0 * hellinger_sq(sp(mid), sp(q)) + 1e-12);
        }
    }
}

TEST_CASE("bernstein pointwise inequality on a grid") {
    for (double G : {0.1, std::numbers::ln2, 1.0}) {
        for (int i = 0; i <= 2000; ++i) {
            double x = -G + (10.0 + G) * i / 2000.0;
            REQUIRE(bernstein_pointwise_slack(x, G) >= -1e-12);
        }
    }
    CHECK_THROWS_AS(bernstein_c_gamma(0.0), ArgumentError);
}

TEST_CASE("quadrature of constants and method selection") {
    InputLaw law = InputLaw::uniform(2);
    RiskEstimate r = integrate([](std::span<const double>) { return 0.25; }, law);
    CHECK(r.value == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(r.method == RiskMethod::quadrature);
    CHECK(default_grid_cells(1) == 2048);
    CHECK(default_grid_cells(2) == 128);
    CHECK(default_grid_cells(3) == 32);
    RiskOptions zero;
    zero.budget = 0;
    CHECK_THROWS_AS(integrate([](std::span<const double>) { return 1.0; }, law, zero), ArgumentError);
    CHECK(risk_method_from_string("mc") == RiskMethod::mc);
    CHECK_THROWS_AS(risk_method_from_string("simpson"), ArgumentError);
}

TEST_CASE("risk of constant functions equals the scalar distance") {
    ConditionalProbability eta = [](std::span<const double>) { return std::vector<double>{0.5, 0.5}; };
    ConditionalProbability ph = [](std::span<const double>) { return std::vector<double>{0.25, 0.75}; };
    InputLaw law = InputLaw::uniform(1);
    CHECK(risk(eta, ph, law).value ==
          doctest::Approx(hellinger_sq(SimplexVector{0.5, 0.5}, SimplexVector{0.25, 0.75})).epsilon(1e-12));
    CHECK(risk(eta, eta, law).value == 0.0);
}

TEST_CASE("risk rejects off-simplex outputs naming the point") {
    ConditionalProbability bad = [](std::span<const double>) { return std::vector<double>{0.7, 0.7}; };
    ConditionalProbability ok = [](std::span<const double>) { return std::vector<double>{0.5, 0.5}; };
    CHECK_THROWS_AS(risk(ok, bad, InputLaw::uniform(1)), DataError);
}

TEST_CASE("kl risk propagates the infinite sentinel") {
    ConditionalProbability eta = [](std::span<const double> x) {
        return x[0] < 0.5 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.5, 0.5};
    };
    ConditionalProbability ph = [](std::span<const double>) { return std::vector<double>{0.0, 1.0}; };
    CHECK(risk_kl(eta, ph, InputLaw::uniform(1)).value == KL_INFINITY);
}

TEST_CASE("quadrature and Monte Carlo agree within three standard errors") {
    ConditionalProbability eta = [](std::span<const double> x) {
        double a = 1.0 / (1.0 + std::exp(-3.0 * (x[0] - x[1])));
        return std::vector<double>{a, 1.0 - a};
    };
    ConditionalProbability ph = [](std::span<const double> x) {
        double a = 0.2 + 0.6 * x[0] * x[1];
        return std::vector<double>{a, 1.0 - a};
    };
    for (auto law : {InputLaw::uniform(2), InputLaw::mixture(2)}) {
        RiskOptions q, m;
        q.method = RiskMethod::quadrature;
        m.method = RiskMethod::mc;
        m.seed = 5;
        RiskEstimate rq = risk(eta, ph, law, q), rm = risk(eta, ph, law, m);
        CHECK(std::fabs(rq.value - rm.value) <= 3.0 * std::hypot(rq.error, rm.error));
        CHECK(rm.samples == DEFAULT_MC_BUDGET);
    }
}

TEST_CASE("bernstein seminorm of a constant matches the closed form") {
    LabelFunction g = [](std::span<const double>, std::size_t) { return 0.3; };
    ConditionalProbability eta = [](std::span<const double>) { return std::vector<double>{0.4, 0.6}; };
    RiskEstimate r = bernstein_seminorm_sq(g, 2.0, eta, InputLaw::uniform(1));
    CHECK(r.value == doctest::Approx(bernstein_constant(0.3, 2.0)).epsilon(1e-12));
}

TEST_CASE("g_p examples and lower bound") {
    CHECK(gp_value(1.0, 0.5) == doctest::Approx(0.5 * std::log(1.5)));
    CHECK(gp_value(0.3, 0.3) == 0.0);
    CHECK(gp_value(0.3, 0.0) == 0.0);
    RandomStream s(12, "test.gp");
    for (int i = 0; i < 20000; ++i) {
        REQUIRE(gp_value(s.uniform(), s.uniform()) >= -0.5 * std::log(2.0) - 1e-12);
    }
}

TEST_CASE("rho_1 squared of g_p is bounded by 16 c0^2 times the midpoint risk") {
    RandomStream s(13, "test.cross");
    InputLaw law = InputLaw::uniform(1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a = gen::simplex(s, 3), b = gen::simplex(s, 3), c = gen::simplex(s, 3);
        std::vector<double> slope = gen::simplex(s, 3);
        auto make = [](std::vector<double> base, std::vector<double> tilt) {
            return ConditionalProbability([=](std::span<const double> x) {
                std::vector<double> v(base.size());
                for (std::size_t k = 0; k < v.size(); ++k) {
                    v[k] = (1.0 - x[0]) * base[k] + x[0] * tilt[k];
                }
                return v;
            });
        };
        ConditionalProbability eta = make(a, slope), p = make(b, a), pt = make(c, b);
        // Keep ptilde away from zero so c0 is finite.
        ConditionalProbability ptilde = [pt](std::span<const double> x) {
            std::vector<double> v = pt(x);
            for (double& e : v) {
                e = 0.9 * e + 0.1 / 3.0;
            }
            return v;
        };
        AssumptionReport ar = assumption_ratio(eta, ptilde, probe_grid(1, 2049));
        RiskEstimate lhs = bernstein_seminorm_sq(gp_function(p, ptilde), 1.0, eta, law);
        ConditionalProbability mid = [p, ptilde](std::span<const double> x) {
            std::vector<double> u = p(x), v = ptilde(x);
            for (std::size_t k = 0; k < u.size(); ++k) {
                u[k] = 0.5 * (u[k] + v[k]);
            }
            return u;
        };
        RiskEstimate rhs = risk(mid, ptilde, law);
        CHECK(lhs.value <= 16.0 * ar.c0_sq * rhs.value + lhs.error + 16.0 * ar.c0_sq * rhs.error + 1e-12);
    }
}
