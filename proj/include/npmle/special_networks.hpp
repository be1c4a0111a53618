#pragma once

#include <npmle/network.hpp>

#include <cstddef>
#include <vector>

namespace npmle {

// Scalar network G on [0,1] approximating x -> log(max(x, 4/M)): linear
// interpolation of that function at geometric knots from 4/M to 1, held
// constant below 4/M. The knot count starts at `knots` and doubles until the
// analytic per-segment error and a dense-grid check both give
// sup |e^G - x| <= 4/M; past `max_knots` a ConstructionError is raised.
struct ExpLogNetwork {
    Network net;
    double M = 0.0;
    std::size_t knots = 0;
    // Largest analytic deviation max_x |e^{G(x)} - x| over [0,1].
    double max_error = 0.0;
    // G on [0, 4/M]; the largest double with e^G <= 4/M.
    double floor_value = 0.0;
};

ExpLogNetwork build_exp_log_network(double M, std::size_t knots = 8, std::size_t max_knots = 1u << 16);

// relu(h) - relu(h - 1) applied coordinatewise: one hidden layer of width 2 * dim.
Network clip_network(std::size_t dim);

// Depth-L identity on R^dim, exact for all signs via relu(h) - relu(-h).
Network identity_network(std::size_t dim, std::size_t L);

// b o a. The last linear map of a and the first of b are merged into one matrix,
// so the depth is L_a + L_b. a must have an identity head; the head of b is kept.
Network stitch_compose(const Network& a, const Network& b);
// x -> (f_1(x), ..., f_J(x)); depths are synchronized to the deepest member first.
Network stitch_parallel(const std::vector<Network>& nets);
// Pads net to target_L hidden layers without changing its output.
Network stitch_sync_depth(const Network& net, std::size_t target_L);

// p_k = e^{G(clip(H_k))} / sum_j e^{G(clip(H_j))} for scalar identity-head
// networks H_1..H_K on a common input, realized as a single softmax network.
Network compose_with_floor(const std::vector<Network>& H, const ExpLogNetwork& G);
Network compose_with_floor(const std::vector<Network>& H, double M);

// Lower bound on every p_k when sum_k clip(H_k) <= 1: (4/M) / (1 + K 4/M).
double combinator_floor_normalized(std::size_t K, double M);
// Lower bound for arbitrary H: each e^{G} lies in [4/M, 1], so p_k >= (4/M) / (4/M + K - 1).
double combinator_floor(std::size_t K, double M);

// Maps the approximation floor to the combinator scale: M = 1 / max_i N^{-2 beta_i* / t_i}.
double combinator_scale(std::span<const double> beta_star, std::span<const std::size_t> t, double N);

} // namespace npmle
