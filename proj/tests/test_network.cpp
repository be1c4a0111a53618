#include <doctest.h>

#include "generators.hpp"

#include <npmle/datagen.hpp>
#include <npmle/errors.hpp>
#include <npmle/network.hpp>

#include <cmath>

using namespace npmle;

namespace {

Dataset random_dataset(RandomStream& s, std::size_t n, std::size_t d, std::size_t K) {
    Dataset ds;
    ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.labels.resize(n);
    ds.K = K;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.uniform();
        }
        ds.labels[i] = s.uniform_index(static_cast<std::uint32_t>(K));
    }
    return ds;
}

} // namespace

TEST_CASE("forward pass of a hand-built network") {
    ArchSpec a{1, {1, 2, 2}, 10.0, std::nullopt, Head::identity};
    NetParams p = NetParams::zeros(a);
    p.W[0] << 1.0, -1.0;
    p.v[0] << 0.25, -0.5;
    p.W[1] << 1.0, 0.0, 0.0, 2.0;
    std::vector<double> x{0.75};
    auto y = forward(p, a, x);
    CHECK(y[0] == doctest::Approx(0.5));
    CHECK(y[1] == doctest::Approx(0.0));
    x[0] = 0.25;
    y = forward(p, a, x);
    CHECK(y[1] == doctest::Approx(2.0 * 0.25));
}

TEST_CASE("softmax head lands on the simplex") {
    RandomStream s(41, "test.net");
    for (int t = 0; t < 50; ++t) {
        ArchSpec a = gen::arch(s, 3, 5, 3, 8);
        NetParams p = gen::params(s, a, 3.0);
        auto y = forward(p, a, gen::point(s, a.input_dim()));
        REQUIRE(on_simplex(y));
    }
}

TEST_CASE("batch and single forward agree") {
    RandomStream s(42, "test.net");
    ArchSpec a = gen::arch(s, 3, 4, 3, 6, Head::identity);
    NetParams p = gen::params(s, a);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.input_dim()), 7);
    for (Eigen::Index i = 0; i < X.size(); ++i) {
        X.data()[i] = s.uniform();
    }
    Eigen::MatrixXd out = forward_logits(p, X);
    for (Eigen::Index c = 0; c < 7; ++c) {
        std::vector<double> x(X.col(c).data(), X.col(c).data() + X.rows());
        auto y = forward_logits(p, x);
        for (std::size_t k = 0; k < y.size(); ++k) {
            CHECK(out(static_cast<Eigen::Index>(k), c) == doctest::Approx(y[k]).epsilon(1e-14));
        }
    }
}

TEST_CASE("backprop matches central differences") {
    RandomStream s(43, "test.grad");
    for (int t = 0; t < 10; ++t) {
        ArchSpec a = gen::arch(s, 3, 4, 3, 8);
        NetParams p = gen::params(s, a);
        Dataset ds = random_dataset(s, 12, a.input_dim(), a.output_dim());
        NetParams g = gradient(p, a, ds);
        double worst = 0.0;
        auto probe = [&](double& entry, double analytic) {
            double keep = entry;
            entry = keep + 1e-5;
            double up = cross_entropy(p, a, ds);
            entry = keep - 1e-5;
            double down = cross_entropy(p, a, ds);
            entry = keep;
            double fd = (up - down) / 2e-5;
            worst = std::max(worst, std::fabs(fd - analytic) / std::max(1.0, std::fabs(fd)));
        };
        for (std::size_t l = 0; l < p.W.size(); ++l) {
            for (Eigen::Index i = 0; i < p.W[l].size(); ++i) {
                probe(p.W[l].data()[i], g.W[l].data()[i]);
            }
        }
        for (std::size_t l = 0; l < p.v.size(); ++l) {
            for (Eigen::Index i = 0; i < p.v[l].size(); ++i) {
                probe(p.v[l].data()[i], g.v[l].data()[i]);
            }
        }
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("projection clamps every entry") {
    RandomStream s(44, "test.proj");
    ArchSpec a = gen::arch(s, 2, 3, 2, 5);
    NetParams p = gen::params(s, a, 5.0);
    NetParams q = project_sup(p, 0.7);
    CHECK(q.max_abs() <= 0.7);
    CHECK(project_sup(q, 0.7) == q);
    CHECK(count_nonzero(NetParams::zeros(a)) == 0);
}

TEST_CASE("shape and architecture validation") {
    ArchSpec a{2, {2, 3, 3, 2}, 1.0, std::nullopt, Head::softmax};
    CHECK_NOTHROW(a.validate());
    CHECK(a.parameter_count() == 6 + 9 + 6 + 3 + 3);
    ArchSpec bad = a;
    bad.widths.pop_back();
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    NetParams p = NetParams::zeros(a);
    p.W[1].resize(2, 2);
    CHECK_THROWS_AS(check_shapes(p, a), ArgumentError);
}

TEST_CASE("network JSON round trip is exact") {
    RandomStream s(45, "test.json");
    ArchSpec a = gen::arch(s, 3, 4, 3, 5);
    Network net{a, gen::params(s, a)};
    Network back = Network::from_json(nlohmann::json::parse(net.to_json().dump()));
    CHECK(back.arch == net.arch);
    CHECK(back.params == net.params);
    CHECK(arch_of(net.params, Head::softmax).widths == a.widths);
}

TEST_CASE("initializers respect their scale and shift") {
    ArchSpec a{2, {3, 5, 4, 2}, 100.0, std::nullopt, Head::softmax};
    RandomStream s(46, "train.init");
    NetParams g = glorot_init(a, s, -0.1);
    CHECK(g.W[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 8.0));
    CHECK(g.v[0].maxCoeff() == -0.1);
    NetParams h = he_init(a, s);
    CHECK(h.W[1].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 5.0));
    CHECK(h.v[1].cwiseAbs().maxCoeff() == 0.0);
}
