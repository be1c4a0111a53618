#include <doctest.h>

#include "generators.hpp"

#include <npmle/errors.hpp>
#include <npmle/models.hpp>

#include <cmath>
#include <numbers>

using namespace npmle;

TEST_CASE("hoelder floor is the largest integer strictly below beta") {
    CHECK(hoelder_floor(0.5) == 0);
    CHECK(hoelder_floor(1.0) == 0);
    CHECK(hoelder_floor(1.5) == 1);
    CHECK(hoelder_floor(2.0) == 1);
    CHECK(hoelder_floor(2.01) == 2);
}

TEST_CASE("library block radii bound the probe-grid norm") {
    std::vector<HoelderBlock> blocks{
        polynomial_block({0.1, -0.4, 0.7}, 2.5), cusp_block(0.3, 0.5, 2.0, -0.5), cusp_block(0.5, 1.0, 4.0, -1.0),
        sinusoid_block(0.75, 2.0 * std::numbers::pi, 0.0, 1.0), sinusoid_block(0.3, 5.0, 0.4, 1.7, 0.1),
        zero_block(3.0)};
    for (const auto& b : blocks) {
        CAPTURE(b.name);
        CHECK(hoelder_norm_scan(b.derivative, b.beta, 513) <= b.radius * (1.0 + 1e-9) + 1e-12);
    }
    CHECK_THROWS_AS(cusp_block(0.5, 1.5), ArgumentError);
    CHECK_THROWS_AS(library_hoelder("wavelet", nlohmann::json::object()), ArgumentError);
}

TEST_CASE("composition spec validation and JSON round trip") {
    CompositionSpec s{2, {3, 3, 1, 1}, {1, 3, 1}, {1.0, 3.0, 1.0}, 2.0, 3};
    CHECK_NOTHROW(s.validate());
    CompositionSpec back = CompositionSpec::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CompositionSpec bad = s;
    bad.t[0] = 4;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = s;
    bad.beta[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = s;
    bad.K = 1;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = s;
    bad.Q = 0.1;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("effective smoothness oracle values") {
    std::vector<double> a{1.5, 2.0, 0.5};
    auto s = effective_smoothness(a);
    CHECK(s[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s[2] == doctest::Approx(0.5).epsilon(1e-12));
    std::vector<double> b{0.8, 3.0, 0.6, 1.2};
    auto t = effective_smoothness(b);
    CHECK(t[0] == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(t[1] == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(t[2] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(t[3] == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("phi_n oracle values and tie-break") {
    std::vector<double> beta{1.5, 2.0, 0.5};
    std::vector<std::size_t> t{1, 2, 1};
    RateValue r = rate_phi_n(beta, t, 1024);
    CHECK(r.value == doctest::Approx(0.099212565748012467172).epsilon(1e-12));
    CHECK(r.index == 1);
    std::vector<double> beta2{2.0, 0.7};
    std::vector<std::size_t> t2{3, 1};
    RateValue r2 = rate_phi_n(beta2, t2, 5000);
    CHECK(r2.value == doctest::Approx(0.066535741106607557268).epsilon(1e-12));
    CHECK(r2.index == 0);
}

TEST_CASE("phi_n is decreasing in n and dominated by the slowest stage") {
    RandomStream s(21, "test.models");
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t r = s.uniform_index(3);
        std::vector<double> beta;
        std::vector<std::size_t> t;
        for (std::size_t i = 0; i <= r; ++i) {
            beta.push_back(s.uniform(0.2, 3.0));
            t.push_back(1 + s.uniform_index(3));
        }
        double n = s.uniform(10.0, 1e6);
        RateValue a = rate_phi_n(beta, t, n), b = rate_phi_n(beta, t, 2.0 * n);
        REQUIRE(b.value < a.value);
        auto bs = effective_smoothness(beta);
        for (std::size_t i = 0; i <= r; ++i) {
            REQUIRE(std::pow(n, -bs[i] / (bs[i] + t[i])) <= a.value * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("composition error bound oracle values") {
    std::vector<double> Q{1, 1}, b{1, 1}, e{0.1, 0.1};
    CHECK(composition_error_bound(Q, b, e) == doctest::Approx(0.4).epsilon(1e-12));
    std::vector<double> Q3{1.5, 2, 1.2}, b3{0.7, 1.3, 0.5}, e3{0.01, 0.02, 0.03};
    CHECK(composition_error_bound(Q3, b3, e3) == doctest::Approx(2.7171454629946437156).epsilon(1e-12));
}

TEST_CASE("stock GAM is a K=2 simplex-valued model with the embedded spec") {
    TrueModel m = make_model("stock_gam");
    CHECK(m.classes() == 2);
    CHECK(m.dim() == 1);
    CHECK(m.spec().r == 2);
    CHECK(m.spec().beta == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(m.phi(10000).value == doctest::Approx(0.01).epsilon(1e-12));
    for (int i = 0; i <= 100; ++i) {
        std::vector<double> x{i / 100.0};
        auto p = m(x);
        REQUIRE(on_simplex(p));
    }
}

TEST_CASE("gam from JSON and range violations") {
    nlohmann::json params = {{"scores",
                               {{{{"name", "cusp"}, {"center", 0.4}, {"beta", 0.5}}},
                                {{{"name", "zero"}, {"beta", 0.5}}},
                                {{{"name", "polynomial"}, {"coefficients", {0.0, 1.0}}, {"beta", 0.5}}}}}};
    TrueModel m = make_model("gam", params);
    CHECK(m.classes() == 3);
    CHECK(m.spec().beta[0] == 0.5);
    nlohmann::json tight = params;
    tight["Q"] = 0.1;
    CHECK_THROWS_AS(make_model("gam", tight), ArgumentError);
    nlohmann::json mixed = {{"scores", {{{{"name", "zero"}, {"beta", 1.0}}}, {{{"name", "zero"}, {"beta", 2.0}}}}}};
    CHECK_THROWS_AS(make_model("gam", mixed), ArgumentError);
    CHECK_THROWS_AS(make_model("nonexistent"), ArgumentError);
}

TEST_CASE("composition models chain rescaled stages") {
    CompositionStage g0{2, 1, 2, 1.0, 1.0, [](std::span<const double> x, std::span<double> y) { y[0] = x[0] - x[1]; }};
    CompositionStage g1{1, 2, 1, 1.0, 1.0, [](std::span<const double> x, std::span<double> y) {
                            y[0] = x[0];
                            y[1] = -x[0];
                        }};
    TrueModel m = make_composition({g0, g1}, 2, CompositionHead::softmax);
    std::vector<double> x{0.9, 0.1};
    auto p = m(x);
    // h_0 = 0.8 / 2 + 0.5 = 0.9, then g_1 sees 2 * 0.9 - 1 = 0.8.
    double e = std::exp(0.8), f = std::exp(-0.8);
    CHECK(p[0] == doctest::Approx(e / (e + f)).epsilon(1e-13));
    CompositionStage wild{2, 1, 2, 1.0, 0.5, [](std::span<const double> x, std::span<double> y) { y[0] = x[0] + x[1]; }};
    TrueModel w = make_composition({wild, g1}, 2, CompositionHead::softmax);
    CHECK_THROWS_AS(w(x), DataError);
}

TEST_CASE("logistic and uniform catalog entries") {
    TrueModel u = make_model("uniform", {{"K", 4}, {"d", 2}});
    std::vector<double> x{0.3, 0.8};
    for (double v : u(x)) {
        CHECK(v == doctest::Approx(0.25));
    }
    TrueModel l = make_model(nlohmann::json{{"name", "logistic"}, {"params", {{"slope", 2.0}}}});
    std::vector<double> y{0.5};
    CHECK(l(y)[0] == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))));
}
