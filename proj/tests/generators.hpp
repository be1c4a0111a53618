#pragma once

// Hand-rolled generators for property tests.

#include <npmle/network.hpp>
#include <npmle/rng.hpp>
#include <npmle/simplex.hpp>

#include <cmath>
#include <vector>

namespace gen {

// Dirichlet(1) draw; with probability `zero_prob` per entry a coordinate is forced to 0 (at least one stays positive).
inline std::vector<double> simplex(npmle::RandomStream& s, std::size_t K, double zero_prob = 0.0) {
    std::vector<double> v(K);
    double sum = 0.0;
    std::size_t keep = s.uniform_index(static_cast<std::uint32_t>(K));
    for (std::size_t k = 0; k < K; ++k) {
        bool zero = k != keep && s.uniform() < zero_prob;
        v[k] = zero ? 0.0 : -std::log1p(-s.uniform());
        sum += v[k];
    }
    for (double& x : v) {
        x /= sum;
    }
    return v;
}

inline std::vector<double> point(npmle::RandomStream& s, std::size_t d) {
    std::vector<double> x(d);
    for (double& v : x) {
        v = s.uniform();
    }
    return x;
}

inline npmle::ArchSpec arch(npmle::RandomStream& s, std::size_t max_d, std::size_t max_K, std::size_t max_L,
                            std::size_t max_width, npmle::Head head = npmle::Head::softmax) {
    npmle::ArchSpec a;
    a.L = 1 + s.uniform_index(static_cast<std::uint32_t>(max_L));
    a.widths.push_back(1 + s.uniform_index(static_cast<std::uint32_t>(max_d)));
    for (std::size_t l = 0; l < a.L; ++l) {
        a.widths.push_back(1 + s.uniform_index(static_cast<std::uint32_t>(max_width)));
    }
    a.widths.push_back(2 + s.uniform_index(static_cast<std::uint32_t>(max_K - 1)));
    a.B = 10.0;
    a.head = head;
    return a;
}

// Gaussian-ish entries scaled by `scale`, shifts uniform in [-0.5, 0.5].
inline npmle::NetParams params(npmle::RandomStream& s, const npmle::ArchSpec& a, double scale = 1.0) {
    npmle::NetParams p = npmle::NetParams::zeros(a);
    for (auto& w : p.W) {
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w.data()[i] = scale * (s.uniform() + s.uniform() + s.uniform() - 1.5);
        }
    }
    for (auto& v : p.v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            v[i] = s.uniform(-0.5, 0.5);
        }
    }
    return p;
}

} // namespace gen
