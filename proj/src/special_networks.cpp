#include <npmle/special_networks.hpp>

#include <npmle/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace npmle {

namespace {

// max over [a, b] of x - exp(G(x)) for G the chord of log between a and b.
double segment_error(double a, double b) {
    double r = std::log(b / a);
    double peak = (b - a) / r; // value of e^G where the gap is widest
    double x = a + (b - a) * std::log(peak / a) / r;
    return std::max(0.0, x - peak);
}

} // namespace

ExpLogNetwork build_exp_log_network(double M, std::size_t knots, std::size_t max_knots) {
    if (!(M >= 2.0)) {
        throw ArgumentError("exp-log network needs M >= 2");
    }
    double lo = 4.0 / M;
    double floor_value = std::log(lo);
    while (std::exp(floor_value) > lo) {
        floor_value = std::nextafter(floor_value, -std::numeric_limits<double>::infinity());
    }
    for (std::size_t J = std::max<std::size_t>(knots, 1); J <= max_knots; J *= 2) {
        // For M <= 4 the target is the constant log(4/M) on [0,1] and no knots are needed.
        std::vector<double> t, g;
        if (lo < 1.0) {
            for (std::size_t j = 0; j <= J; ++j) {
                t.push_back(lo * std::pow(1.0 / lo, static_cast<double>(j) / static_cast<double>(J)));
                g.push_back(std::log(t.back()));
            }
            t.back() = 1.0;
            g.back() = 0.0;
            g.front() = floor_value;
        }
        double worst = std::exp(floor_value); // attained at x = 0
        for (std::size_t j = 0; j + 1 < t.size(); ++j) {
            worst = std::max(worst, segment_error(t[j], t[j + 1]));
        }
        if (worst > lo) {
            continue;
        }
        // Units relu(x + 1) - relu(x) give the constant; one unit per knot adds a slope change.
        std::size_t segments = t.empty() ? 0 : t.size() - 1;
        ArchSpec arch;
        arch.L = 1;
        arch.widths = {1, 2 + segments, 1};
        arch.head = Head::identity;
        NetParams p = NetParams::zeros(arch);
        p.W[0].setOnes();
        p.v[0](0) = -1.0;
        p.W[1](0, 0) = floor_value;
        p.W[1](0, 1) = -floor_value;
        double previous = 0.0;
        for (std::size_t j = 0; j < segments; ++j) {
            double slope = (g[j + 1] - g[j]) / (t[j + 1] - t[j]);
            p.v[0](static_cast<Eigen::Index>(2 + j)) = t[j];
            p.W[1](0, static_cast<Eigen::Index>(2 + j)) = slope - previous;
            previous = slope;
        }
        arch.B = p.max_abs();
        ExpLogNetwork out{Network{arch, std::move(p)}, M, segments + 1, worst, floor_value};
        constexpr std::size_t probes = 20001;
        Eigen::RowVectorXd xs = Eigen::RowVectorXd::LinSpaced(probes, 0.0, 1.0);
        Eigen::MatrixXd G = forward_logits(out.net.params, xs);
        double dense = ((G.array().exp() - xs.array()).abs()).maxCoeff();
        out.max_error = std::max(worst, dense);
        if (out.max_error <= lo) {
            return out;
        }
    }
    throw ConstructionError("exp-log network: knot budget " + std::to_string(max_knots) +
                            " exhausted before reaching the 4/M bound");
}

Network clip_network(std::size_t dim) {
    auto m = static_cast<Eigen::Index>(dim);
    ArchSpec arch;
    arch.L = 1;
    arch.widths = {dim, 2 * dim, dim};
    arch.head = Head::identity;
    NetParams p = NetParams::zeros(arch);
    p.W[0].topRows(m).setIdentity();
    p.W[0].bottomRows(m).setIdentity();
    p.v[0].tail(m).setOnes();
    p.W[1].leftCols(m).setIdentity();
    p.W[1].rightCols(m) = -Eigen::MatrixXd::Identity(m, m);
    arch.B = 1.0;
    return {arch, std::move(p)};
}

Network identity_network(std::size_t dim, std::size_t L) {
    ArchSpec arch;
    arch.L = 0;
    arch.widths = {dim, dim};
    arch.head = Head::identity;
    NetParams p = NetParams::zeros(arch);
    p.W[0].setIdentity();
    return stitch_sync_depth(Network{arch, std::move(p)}, L);
}

Network stitch_sync_depth(const Network& net, std::size_t target_L) {
    const ArchSpec& a = net.arch;
    if (target_L < a.L) {
        throw ArgumentError("cannot shorten a network from depth " + std::to_string(a.L) + " to " +
                            std::to_string(target_L));
    }
    if (target_L == a.L) {
        return net;
    }
    std::size_t extra = target_L - a.L;
    auto k = static_cast<Eigen::Index>(a.output_dim());
    Network out;
    out.arch = a;
    out.arch.L = target_L;
    out.arch.widths.pop_back();
    for (std::size_t e = 0; e < extra; ++e) {
        out.arch.widths.push_back(2 * a.output_dim());
    }
    out.arch.widths.push_back(a.output_dim());
    out.params.W.assign(net.params.W.begin(), net.params.W.end() - 1);
    out.params.v = net.params.v;
    const Eigen::MatrixXd& last = net.params.W.back();
    Eigen::MatrixXd split(2 * k, last.cols());
    split.topRows(k) = last;
    split.bottomRows(k) = -last;
    out.params.W.push_back(split);
    out.params.v.push_back(Eigen::VectorXd::Zero(2 * k));
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
    for (std::size_t e = 1; e < extra; ++e) {
        Eigen::MatrixXd mid(2 * k, 2 * k);
        mid << I, -I, -I, I;
        out.params.W.push_back(mid);
        out.params.v.push_back(Eigen::VectorXd::Zero(2 * k));
    }
    Eigen::MatrixXd merge(k, 2 * k);
    merge << I, -I;
    out.params.W.push_back(merge);
    out.arch.B = std::max(a.B, 1.0);
    return out;
}

Network stitch_compose(const Network& a, const Network& b) {
    if (a.arch.head != Head::identity) {
        throw ArgumentError("the inner network of a composition needs an identity head");
    }
    if (a.arch.output_dim() != b.arch.input_dim()) {
        throw ArgumentError("composition interface mismatch: " + std::to_string(a.arch.output_dim()) + " vs " +
                            std::to_string(b.arch.input_dim()));
    }
    Network out;
    out.arch.L = a.arch.L + b.arch.L;
    out.arch.head = b.arch.head;
    out.arch.widths.assign(a.arch.widths.begin(), a.arch.widths.end() - 1);
    out.arch.widths.insert(out.arch.widths.end(), b.arch.widths.begin() + 1, b.arch.widths.end());
    out.params.W.assign(a.params.W.begin(), a.params.W.end() - 1);
    out.params.W.push_back(b.params.W.front() * a.params.W.back());
    out.params.W.insert(out.params.W.end(), b.params.W.begin() + 1, b.params.W.end());
    out.params.v = a.params.v;
    out.params.v.insert(out.params.v.end(), b.params.v.begin(), b.params.v.end());
    out.arch.B = std::max(out.params.max_abs(), 1e-300);
    return out;
}

Network stitch_parallel(const std::vector<Network>& nets) {
    if (nets.empty()) {
        throw ArgumentError("parallelization needs at least one network");
    }
    std::size_t depth = 0;
    for (const auto& n : nets) {
        if (n.arch.input_dim() != nets[0].arch.input_dim()) {
            throw ArgumentError("parallel members must share the input dimension");
        }
        if (n.arch.head != Head::identity) {
            throw ArgumentError("parallel members need identity heads");
        }
        depth = std::max(depth, n.arch.L);
    }
    std::vector<Network> synced;
    for (const auto& n : nets) {
        synced.push_back(stitch_sync_depth(n, depth));
    }
    Network out;
    out.arch.L = depth;
    out.arch.head = Head::identity;
    out.arch.widths.assign(depth + 2, 0);
    out.arch.widths[0] = nets[0].arch.input_dim();
    for (const auto& n : synced) {
        for (std::size_t i = 1; i < depth + 2; ++i) {
            out.arch.widths[i] += n.arch.widths[i];
        }
    }
    out.params = NetParams::zeros(ArchSpec{depth, out.arch.widths, 1.0, std::nullopt, Head::identity});
    std::vector<Eigen::Index> row(depth + 2, 0);
    for (const auto& n : synced) {
        for (std::size_t i = 0; i <= depth; ++i) {
            const auto& w = n.params.W[i];
            Eigen::Index col = i == 0 ? 0 : row[i];
            out.params.W[i].block(row[i + 1], col, w.rows(), w.cols()) = w;
            if (i < depth) {
                out.params.v[i].segment(row[i + 1], w.rows()) = n.params.v[i];
            }
        }
        for (std::size_t i = 1; i < depth + 2; ++i) {
            row[i] += static_cast<Eigen::Index>(n.arch.widths[i]);
        }
    }
    out.arch.B = std::max(out.params.max_abs(), 1e-300);
    return out;
}

Network compose_with_floor(const std::vector<Network>& H, const ExpLogNetwork& G) {
    if (H.size() < 2) {
        throw ArgumentError("the combinator needs at least two scalar networks");
    }
    for (const auto& h : H) {
        if (h.arch.output_dim() != 1) {
            throw ArgumentError("combinator members must be scalar networks");
        }
    }
    std::size_t K = H.size();
    Network clipped = stitch_compose(stitch_parallel(H), clip_network(K));
    // K copies of G side by side, copy k reading coordinate k.
    Network logs = stitch_parallel(std::vector<Network>(K, G.net));
    auto per = static_cast<Eigen::Index>(G.net.arch.widths[1]);
    Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(logs.params.W[0].rows(), static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        w0.block(static_cast<Eigen::Index>(k) * per, static_cast<Eigen::Index>(k), per, 1) = G.net.params.W[0];
    }
    logs.params.W[0] = w0;
    logs.arch.widths[0] = K;
    Network out = stitch_compose(clipped, logs);
    out.arch.head = Head::softmax;
    return out;
}

Network compose_with_floor(const std::vector<Network>& H, double M) {
    if (!(M >= 2.0)) {
        throw ArgumentError("combinator scale M must be at least 2");
    }
    return compose_with_floor(H, build_exp_log_network(M));
}

double combinator_floor_normalized(std::size_t K, double M) {
    double a = 4.0 / M;
    return a / (1.0 + static_cast<double>(K) * a);
}

double combinator_floor(std::size_t K, double M) {
    double a = 4.0 / M;
    return a / (a + static_cast<double>(K) - 1.0);
}

double combinator_scale(std::span<const double> beta_star, std::span<const std::size_t> t, double N) {
    if (beta_star.size() != t.size() || beta_star.empty()) {
        throw ArgumentError("combinator scale needs matching nonempty lists");
    }
    double floor = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        floor = std::max(floor, std::pow(N, -2.0 * beta_star[i] / static_cast<double>(t[i])));
    }
    return 1.0 / floor;
}

} // namespace npmle
