#include <doctest.h>

#include <npmle/errors.hpp>
#include <npmle/minimax.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

using namespace npmle;

TEST_CASE("bump shape") {
    CHECK(bump_xi(0.5, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(bump_xi(0.0, 1.0, 1.0) == 0.0);
    CHECK(bump_xi(1.2, 1.0, 1.0) == 0.0);
    for (double z : {0.1, 0.27, 0.4}) {
        CHECK(bump_xi(z, 1.5, 0.3) == doctest::Approx(bump_xi(1.0 - z, 1.5, 0.3)));
    }
    // xi'(z) = 4 b (1 - 2z) for beta = 1.
    CHECK(bump_xi_derivative(0.2, 1.0, 0.5, 1) == doctest::Approx(4.0 * 0.5 * 0.6));
}

TEST_CASE("bump normalizer passes the Hoelder scan with radius 1") {
    CHECK(bump_normalizer(1.0) == doctest::Approx(0.2).epsilon(1e-6));
    for (double beta : {0.5, 1.0, 1.5}) {
        double b = bump_normalizer(beta);
        CHECK(bump_hoelder_norm(beta) * b <= 1.0 + 1e-12);
    }
}

TEST_CASE("psi has cell support and the peak product") {
    std::vector<double> u{0.25}, centre{0.3}, outside{0.6};
    double h = 0.1;
    CHECK(psi_u(centre, u, h, 1.0, 0.2) == doctest::Approx(h * 0.2));
    CHECK(psi_u(outside, u, h, 1.0, 0.2) == 0.0);
    std::vector<double> u2{0.35};
    for (int i = 0; i <= 10000; ++i) {
        std::vector<double> x{i / 10000.0};
        REQUIRE(psi_u(x, u, h, 1.0, 0.2) * psi_u(x, u2, h, 1.0, 0.2) == 0.0);
    }
}

TEST_CASE("grid size oracle") {
    CHECK(grid_m_n(1, 2, 100, 1, 1) == 20);
    CHECK(grid_m_n(3.2, 3, 50, 0.5, 2) == 138);
    CHECK(grid_m_n(1, 2, 200, 1, 1) >= grid_m_n(1, 2, 100, 1, 1));
    CHECK_THROWS_AS(grid_m_n(0.5, 2, 100, 1, 1), ArgumentError);
}

TEST_CASE("packing") {
    auto two = vg_packing(8, 1, 2, 100, 1);
    CHECK(two.size() == 2);
    CHECK(two[0] == BitString(8, 1));
    auto four = vg_packing(16, 2, 4, 1000, 2);
    REQUIRE(four.size() == 4);
    for (std::size_t i = 0; i < four.size(); ++i) {
        for (std::size_t j = i + 1; j < four.size(); ++j) {
            CHECK(hamming(four[i], four[j]) >= 2);
        }
    }
    CHECK(vg_packing(16, 2, 4, 1000, 2) == four);
    CHECK_THROWS_AS(vg_packing(4, 5, 2, 10, 1), ArgumentError);
    CHECK_THROWS_AS(vg_packing(4, 4, 10, 50, 1), ConstructionError);
}

TEST_CASE("desk-scale hypothesis set") {
    InputLaw law = InputLaw::mixture(1);
    BumpSpec spec = make_bump_spec(1.0, 1, 1.0, 50, 2, law.Gamma());
    CHECK(smallness(spec, 50, 2).holds());
    boost::math::quadrature::tanh_sinh<double> ts;
    double l1 = ts.integrate([&](double z) { return bump_xi(z, 1.0, spec.b); }, 0.0, 1.0);
    CHECK(spec.xiB_l1 == doctest::Approx(l1).epsilon(1e-10));
    CHECK(spec.xiB_l1 == doctest::Approx(spec.b * 2.0 / 3.0).epsilon(1e-10));
    HypothesisSet hs = build_hypotheses(50, 2, spec);
    CHECK(hs.cells == hs.m_n);
    CHECK(hs.min_distance == (hs.cells + 7) / 8);
    CHECK(hs.W.size() >= hs.target_size);
    double cap = std::pow(hs.h_n, spec.beta_dstar) * spec.b;
    for (std::size_t w = 0; w < hs.W.size(); ++w) {
        for (int i = 0; i <= 500; ++i) {
            std::vector<double> x{i / 500.0};
            auto p = hs.p(w, x);
            REQUIRE(on_simplex(p));
            REQUIRE(p[0] >= 0.0);
            REQUIRE(p[0] <= cap * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("a zeroed bump changes p only inside its cell") {
    BumpSpec spec = make_bump_spec(1.0, 1, 1.0, 50, 2, 1.0);
    HypothesisSet hs = build_hypotheses(50, 2, spec);
    hs.W.push_back(hs.W[0]);
    hs.W.back()[3] = 0;
    std::size_t idx = hs.W.size() - 1;
    for (int i = 0; i <= 2000; ++i) {
        std::vector<double> x{i / 2000.0};
        bool inside = hs.cell_of(x) == 3;
        if (!inside) {
            REQUIRE(hs.p(idx, x) == hs.p(0, x));
        }
    }
    SeparationReport same = verify_separation(hs, 0, 0, InputLaw::uniform(1), 1.0);
    CHECK(same.risk == 0.0);
    CHECK(same.stated_bound == 0.0);
    SeparationReport one = verify_separation(hs, 0, idx, InputLaw::uniform(1), 1.0);
    CHECK(one.ham == 1);
    CHECK(one.stated_bound == doctest::Approx(hs.h_n * hs.h_n * spec.xiB_l1));
    CHECK(one.half_holds);
}

TEST_CASE("KL budget") {
    InputLaw law = InputLaw::mixture(1);
    BumpSpec spec = make_bump_spec(1.0, 1, 1.0, 50, 2, law.Gamma());
    HypothesisSet hs = build_hypotheses(50, 2, spec, 1, 16);
    KlBudgetReport r = verify_kl_budget(hs, 50, law, law.Gamma());
    CHECK(r.kl[0] == 0.0);
    CHECK(r.per_holds);
    CHECK(r.aggregate_holds);
    KlBudgetReport r2 = verify_kl_budget(hs, 100, law, law.Gamma());
    CHECK(r2.per_bound == doctest::Approx(2.0 * r.per_bound));
}

TEST_CASE("positivity precondition is enforced") {
    BumpSpec spec = make_bump_spec(1.0, 1, 1.0, 50, 2, 1.0);
    spec.rho = 1.0;
    CHECK_THROWS_AS(build_hypotheses(0.5, 40, spec), ConstructionError);
}
