#include <npmle/theory.hpp>

#include <npmle/errors.hpp>
#include <npmle/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace npmle {

void BoundInputs::validate() const {
    for (double v : {s, L, B, m_inf, K, n, c0_sq, A}) {
        if (!(v > 0.0)) {
            throw ArgumentError("bound inputs must be positive");
        }
    }
}

double covering_bound_dnn(double delta, double L, double m_inf, double B, double s) {
    if (!(delta > 0.0)) {
        throw ArgumentError("covering radius must be positive");
    }
    return 2.0 * s * L * std::log(std::max(B, 1.0) * (m_inf + 1.0)) + s * std::log(L / delta);
}

double bracketing_from_covering(double delta, double p, double q_total,
                                const std::function<double(double)>& covering_log) {
    if (!(p >= 1.0) || !(q_total > 0.0)) {
        throw ArgumentError("bracketing needs p >= 1 and a positive total measure");
    }
    return covering_log(delta / (2.0 * std::pow(q_total, 1.0 / p)));
}

double entropy_integral_bound(double delta, double s, double L, double A) {
    if (!(delta > 0.0) || !(delta < A)) {
        throw ArgumentError("entropy integral needs 0 < delta < A");
    }
    return delta * std::sqrt(2.0 * s * L) * (std::sqrt(std::log(A / delta)) + std::sqrt(std::numbers::pi));
}

double critical_radius(double s, double L, double A, double n) {
    double arg = std::sqrt(n) * A;
    if (!(arg > 1.0)) {
        throw ArgumentError("critical radius needs sqrt(n) A > 1");
    }
    return std::sqrt(2.0 * s * L) * (std::sqrt(std::log(arg)) + std::sqrt(2.0 * std::numbers::pi)) / std::sqrt(n);
}

double oracle_rhs(double c0_sq, double delta_n, double approx_risk, double n, double c) {
    if (c0_sq < 0.0 || delta_n < 0.0 || approx_risk < 0.0 || c < 0.0 || !(n >= 1.0)) {
        throw ArgumentError("oracle bound needs nonnegative inputs and n >= 1");
    }
    return 514.0 * (1.0 + c0_sq) * (delta_n * delta_n + approx_risk) + c * c * c / n;
}

double A_constant(double K, double B, double m_inf, double L, double N, std::span<const double> beta_star,
                  std::span<const std::size_t> t) {
    if (!(N >= 2.0)) {
        throw ArgumentError("A constant needs N >= 2");
    }
    if (beta_star.size() != t.size() || t.empty()) {
        throw ArgumentError("A constant needs matching nonempty smoothness and arity lists");
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        scale = std::max(scale, std::pow(N, -beta_star[i] / static_cast<double>(t[i])));
    }
    return std::sqrt(2.0) * (K - 1.0) * std::sqrt(K) * std::max(B, 1.0) * (m_inf + 1.0) * L / scale;
}

AssumptionReport assumption_ratio(const ConditionalProbability& eta, const ConditionalProbability& ptilde,
                                  const std::vector<std::vector<double>>& probes) {
    AssumptionReport rep;
    for (const auto& x : probes) {
        std::vector<double> e = eta(x);
        std::vector<double> p = ptilde(x);
        if (e.size() != p.size()) {
            throw ArgumentError("class counts differ");
        }
        for (std::size_t k = 0; k < e.size(); ++k) {
            if (!(p[k] > 0.0)) {
                if (!rep.violated) {
                    rep.violated = true;
                    rep.x = x;
                    rep.k = k;
                }
                rep.c0_sq = INFINITY;
                continue;
            }
            double ratio = e[k] / p[k];
            if (ratio > rep.c0_sq) {
                rep.c0_sq = ratio;
                rep.argmax_x = x;
                rep.argmax_k = k;
            }
        }
    }
    return rep;
}

std::vector<std::vector<double>> probe_grid(std::size_t dim, std::size_t per_axis) {
    if (dim == 0 || per_axis < 2) {
        throw ArgumentError("probe grid needs dim >= 1 and at least two points per axis");
    }
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> idx(dim, 0);
    while (true) {
        std::vector<double> x(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] = static_cast<double>(idx[j]) / static_cast<double>(per_axis - 1);
        }
        out.push_back(std::move(x));
        std::size_t j = 0;
        while (j < dim && ++idx[j] == per_axis) {
            idx[j++] = 0;
        }
        if (j == dim) {
            break;
        }
    }
    return out;
}

double svb_rate(double alpha, const CompositionSpec& spec, double n) {
    if (!(alpha >= 0.0)) {
        throw ArgumentError("SVB exponent alpha must be nonnegative");
    }
    std::vector<double> bs = effective_smoothness(spec);
    double rate = 0.0;
    for (std::size_t i = 0; i < bs.size(); ++i) {
        double a = (1.0 + alpha) * bs[i];
        rate = std::max(rate, std::pow(n, -a / (a + static_cast<double>(spec.t[i]))));
    }
    return rate;
}

double k_rate(const CompositionSpec& spec, double n, double K) {
    std::vector<double> bs = effective_smoothness(spec);
    double rate = 0.0;
    for (std::size_t i = 0; i < bs.size(); ++i) {
        double t = static_cast<double>(spec.t[i]);
        rate = std::max(rate, std::pow(K, (2.0 * bs[i] + 3.0 * t) / (bs[i] + t)) * std::pow(n, -bs[i] / (bs[i] + t)));
    }
    return rate;
}

double k_rate(const CompositionSpec& spec, double n) {
    return k_rate(spec, n, static_cast<double>(spec.K));
}

BesovSmoothness besov_effective(std::span<const double> beta) {
    if (beta.empty()) {
        throw ArgumentError("Besov smoothness needs at least one coordinate");
    }
    BesovSmoothness out;
    double inv = 0.0;
    for (double b : beta) {
        if (!(b > 0.0)) {
            throw ArgumentError("Besov smoothness values must be positive");
        }
        inv += 1.0 / b;
        out.bar = std::max(out.bar, b);
    }
    out.tilde = 1.0 / inv;
    return out;
}

double besov_rate(double beta_tilde, double n) {
    if (!(beta_tilde > 0.0)) {
        throw ArgumentError("effective smoothness must be positive");
    }
    return std::pow(n, -1.0 / (beta_tilde + 1.0));
}

TheoryPipeline theory_pipeline(const CompositionSpec& spec, double n, SparsityForm form) {
    spec.validate();
    constexpr double C = 1.0; // approximation constant of the composition bound
    TheoryPipeline p;
    p.n = n;
    p.phi = rate_phi_n(spec, n).value;
    std::vector<double> bs = effective_smoothness(spec);
    double K = static_cast<double>(spec.K);
    double N = 0.0, floor = 0.0, s_rate = 0.0;
    for (std::size_t i = 0; i < bs.size(); ++i) {
        double t = static_cast<double>(spec.t[i]);
        double e = t / (2.0 * (bs[i] + t));
        N = std::max(N, std::pow(K, e) * std::pow(n, e));
        s_rate = std::max(s_rate, std::pow(n, t / (bs[i] + t)));
    }
    p.N = std::max(2.0, std::ceil(N));
    for (std::size_t i = 0; i < bs.size(); ++i) {
        floor = std::max(floor, std::pow(p.N, -2.0 * bs[i] / static_cast<double>(spec.t[i])));
    }
    p.s = form == SparsityForm::grid ? p.N * p.N * std::log(p.N) : s_rate * std::log(n);
    p.L = std::ceil(std::log(n));
    p.m_inf = std::ceil(std::sqrt(n * p.phi));
    p.B = 0.0;
    for (std::size_t i = 0; i <= spec.r; ++i) {
        p.B = std::max(p.B, std::pow(n * p.phi, (2.0 * spec.beta[i] + 2.0) / static_cast<double>(spec.t[i])));
    }
    p.A = A_constant(K, p.B, p.m_inf, p.L, p.N, bs, spec.t);
    p.delta_n = critical_radius(p.s, p.L, p.A, n);
    p.approx_risk = K * K * (4.0 + C) * floor;
    p.rhs = oracle_rhs(1.0, p.delta_n, p.approx_risk, n, 1.0);
    return p;
}

double loglog_slope(std::span<const double> n, std::span<const double> value) {
    if (n.size() != value.size() || n.size() < 2) {
        throw ArgumentError("slope needs at least two matching points");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0) || !(value[i] > 0.0)) {
            throw ArgumentError("log-log slope needs positive values");
        }
        mx += std::log(n[i]);
        my += std::log(value[i]);
    }
    mx /= static_cast<double>(n.size());
    my /= static_cast<double>(n.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        double dx = std::log(n[i]) - mx;
        sxy += dx * (std::log(value[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

BasicInequalityCheck basic_inequality_constant(const std::vector<std::vector<double>>& candidates,
                                               std::size_t ptilde_index, std::span<const double> eta,
                                               std::span<const std::size_t> labels) {
    if (candidates.empty() || ptilde_index >= candidates.size()) {
        throw ArgumentError("ptilde index outside the candidate family");
    }
    if (labels.empty()) {
        throw ArgumentError("basic inequality needs at least one label");
    }
    std::size_t K = eta.size();
    std::vector<double> freq(K, 0.0);
    for (std::size_t y : labels) {
        if (y >= K) {
            throw ArgumentError("label outside the class range");
        }
        freq[y] += 1.0 / static_cast<double>(labels.size());
    }
    BasicInequalityCheck out;
    double best = INFINITY;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (candidates[j].size() != K) {
            throw ArgumentError("candidate has the wrong number of classes");
        }
        double nll = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            if (freq[k] > 0.0) {
                nll -= freq[k] * (candidates[j][k] > 0.0 ? std::log(candidates[j][k]) : -INFINITY);
            }
        }
        if (nll < best) {
            best = nll;
            out.phat_index = j;
        }
    }
    if (std::isinf(best)) {
        throw DegenerateModelError("every candidate assigns zero probability to an observed label");
    }
    const std::vector<double>& ph = candidates[out.phat_index];
    const std::vector<double>& pt = candidates[ptilde_index];
    std::vector<double> mid(K);
    double c0_sq = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        mid[k] = 0.5 * (ph[k] + pt[k]);
        if (eta[k] > 0.0) {
            c0_sq = std::max(c0_sq, pt[k] > 0.0 ? eta[k] / pt[k] : INFINITY);
        }
        double g = gp_value(ph[k], pt[k]);
        out.empirical_process += (freq[k] - eta[k]) * g;
    }
    out.c0 = std::sqrt(c0_sq);
    out.lhs = hellinger_sq(std::span<const double>(mid), std::span<const double>(pt));
    double r_eta = hellinger_sq(std::span<const double>(pt), eta);
    out.cross_term = 2.0 * (1.0 + out.c0) * std::sqrt(out.lhs * r_eta);
    out.rhs = out.empirical_process + out.cross_term;
    return out;
}

} // namespace npmle
