#include <npmle/minimax.hpp>

#include <npmle/errors.hpp>
#include <npmle/metrics.hpp>
#include <npmle/rng.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace npmle {

namespace {

double falling(double a, int i) {
    double v = 1.0;
    for (int k = 0; k < i; ++k) {
        v *= a - k;
    }
    return v;
}

double binomial(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) {
        v = v * (n - k + i) / i;
    }
    return v;
}

struct GaussRule {
    std::vector<double> nodes;   // on [0,1]
    std::vector<double> weights; // summing to 1
};

GaussRule gauss_rule(std::size_t order) {
    if (order < 1) {
        throw ArgumentError("quadrature order must be positive");
    }
    auto n = static_cast<unsigned>(order);
    // Nonnegative Legendre zeros; for odd n the first one is 0.
    std::vector<double> zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
    std::vector<std::pair<double, double>> full;
    for (double z : zeros) {
        double dp = boost::math::legendre_p_prime(static_cast<int>(n), z);
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        full.emplace_back(z, w);
        if (z != 0.0) {
            full.emplace_back(-z, w);
        }
    }
    std::sort(full.begin(), full.end());
    GaussRule rule;
    for (auto [z, w] : full) {
        rule.nodes.push_back(0.5 * (z + 1.0));
        rule.weights.push_back(0.5 * w);
    }
    return rule;
}

constexpr double LOG2E = std::numbers::log2e;

} // namespace

double bump_xi(double z, double beta_star, double b) {
    if (!(z > 0.0 && z < 1.0)) {
        return 0.0;
    }
    return b * std::pow(4.0, beta_star) * std::pow(z * (1.0 - z), beta_star);
}

double bump_xi_derivative(double z, double beta_star, double b, int j) {
    if (j == 0) {
        return bump_xi(z, beta_star, b);
    }
    if (!(z > 0.0 && z < 1.0)) {
        return 0.0;
    }
    double s = 0.0;
    for (int i = 0; i <= j; ++i) {
        int k = j - i;
        double term = binomial(j, i) * falling(beta_star, i) * std::pow(z, beta_star - i) * falling(beta_star, k) *
                      std::pow(1.0 - z, beta_star - k);
        s += (k % 2 ? -term : term);
    }
    return b * std::pow(4.0, beta_star) * s;
}

double bump_hoelder_norm(double beta_star, std::size_t grid_points) {
    int fl = hoelder_floor(beta_star);
    double alpha = beta_star - fl;
    std::vector<double> z;
    for (std::size_t i = 0; i < grid_points; ++i) {
        z.push_back(static_cast<double>(i) / static_cast<double>(grid_points - 1));
    }
    // Geometric refinement toward the ends, where the quotients of rough bumps peak.
    for (double e = 1.0; e <= 10.0; e += 0.125) {
        double t = std::pow(10.0, -e);
        z.push_back(t);
        z.push_back(1.0 - t);
    }
    std::sort(z.begin(), z.end());
    z.erase(std::unique(z.begin(), z.end()), z.end());
    double norm = 0.0;
    std::vector<double> top(z.size());
    for (int j = 0; j <= fl; ++j) {
        double sup = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            double v = bump_xi_derivative(z[i], beta_star, 1.0, j);
            sup = std::max(sup, std::fabs(v));
            if (j == fl) {
                top[i] = v;
            }
        }
        norm += sup;
    }
    // xi vanishes off [0,1] together with its derivatives below beta, so pairs
    // reaching outside the support never beat the pair ending at 0 or 1.
    double quotient = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t k = i + 1; k < z.size(); ++k) {
            quotient = std::max(quotient, std::fabs(top[i] - top[k]) / std::pow(z[k] - z[i], alpha));
        }
    }
    return norm + quotient;
}

double bump_normalizer(double beta_star) {
    return 1.0 / bump_hoelder_norm(beta_star);
}

double psi_u(std::span<const double> x, std::span<const double> u, double h, double beta_star, double b) {
    if (x.size() < u.size()) {
        throw ArgumentError("point has fewer coordinates than the bump");
    }
    double v = std::pow(h, beta_star);
    for (std::size_t j = 0; j < u.size(); ++j) {
        v *= bump_xi((x[j] - u[j]) / h, beta_star, b);
    }
    return v;
}

std::size_t grid_m_n(double rho, double K, double n, double beta_dstar, double t_star) {
    if (!(rho >= 1.0)) {
        throw ArgumentError("grid constant rho must be at least 1");
    }
    return static_cast<std::size_t>(std::ceil(rho * std::pow(K, 1.0 / beta_dstar) * std::pow(n, 1.0 / (beta_dstar + t_star))));
}

nlohmann::json BumpSpec::to_json() const {
    return {{"beta_star", beta_star}, {"beta_dstar", beta_dstar}, {"t_star", t_star}, {"B_exp", B_exp},
            {"b", b},         {"rho", rho},               {"xi_sup", xi_sup}, {"xiB_l1", xiB_l1},
            {"xiB_l2_sq", xiB_l2_sq}, {"Gamma", Gamma}};
}

Smallness smallness(const BumpSpec& spec, double n, double K) {
    std::size_t m = grid_m_n(spec.rho, K, n, spec.beta_dstar, static_cast<double>(spec.t_star));
    double h = 1.0 / static_cast<double>(m);
    double t = static_cast<double>(spec.t_star);
    Smallness s;
    s.lhs = n * (K - 1.0) * std::pow(h, spec.beta_dstar + t);
    s.rhs = 1.0 / (144.0 * spec.Gamma * LOG2E * (std::pow(spec.xiB_l1, t) + std::pow(spec.xiB_l2_sq, t)));
    return s;
}

BumpSpec make_bump_spec(double beta_star, std::size_t t_star, double B_exp, double n, std::size_t K, double Gamma) {
    if (!(beta_star > 0.0) || t_star == 0 || !(B_exp > 0.0 && B_exp <= 1.0) || !(n >= 1.0) || K < 2 ||
        !(Gamma > 0.0)) {
        throw ArgumentError("bump spec needs beta* > 0, t* >= 1, B in (0,1], n >= 1, K >= 2 and Gamma > 0");
    }
    BumpSpec s;
    s.beta_star = beta_star;
    s.B_exp = B_exp;
    s.beta_dstar = beta_star * B_exp;
    s.t_star = t_star;
    s.Gamma = Gamma;
    s.b = bump_normalizer(beta_star);
    s.xi_sup = s.b;
    boost::math::quadrature::tanh_sinh<double> integrator;
    s.xiB_l1 = integrator.integrate([&](double z) { return std::pow(bump_xi(z, beta_star, s.b), B_exp); }, 0.0, 1.0);
    s.xiB_l2_sq =
        integrator.integrate([&](double z) { return std::pow(bump_xi(z, beta_star, s.b), 2.0 * B_exp); }, 0.0, 1.0);
    double Kd = static_cast<double>(K);
    for (std::size_t step = 0; step <= 1000000; ++step) {
        s.rho = 1.0 + 0.01 * static_cast<double>(step);
        std::size_t m = grid_m_n(s.rho, Kd, n, s.beta_dstar, static_cast<double>(t_star));
        if (smallness(s, n, Kd).holds() && std::pow(static_cast<double>(m), s.beta_dstar) - (Kd - 1.0) >= 1.0) {
            return s;
        }
    }
    throw ConstructionError("no grid constant rho <= 10001 satisfies the smallness condition");
}

BumpSpec make_bump_spec(const CompositionSpec& spec, double n, double Gamma) {
    spec.validate();
    RateValue rate = rate_phi_n(spec, n);
    std::size_t i = rate.index;
    double B = 1.0;
    for (std::size_t l = i + 1; l <= spec.r; ++l) {
        B *= std::min(spec.beta[l], 1.0);
    }
    return make_bump_spec(spec.beta[i], spec.t[i], B, n, spec.K, Gamma);
}

std::size_t hamming(const BitString& a, const BitString& b) {
    if (a.size() != b.size()) {
        throw ArgumentError("Hamming distance needs equal lengths");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i];
    }
    return d;
}

std::vector<BitString> vg_packing(std::size_t length, std::size_t min_dist, std::size_t target_size,
                                  std::size_t budget, std::uint64_t seed) {
    if (target_size < 2) {
        throw ArgumentError("packing target size must be at least 2");
    }
    if (min_dist > length) {
        throw ArgumentError("minimum distance exceeds the string length");
    }
    std::vector<BitString> set{BitString(length, 1)};
    RandomStream stream(seed, "minimax.packing");
    BitString cand(length);
    for (std::size_t draw = 0; draw < budget && set.size() < target_size; ++draw) {
        for (std::size_t i = 0; i < length; ++i) {
            cand[i] = static_cast<std::uint8_t>(stream.next_u32() & 1u);
        }
        bool ok = std::all_of(set.begin(), set.end(), [&](const BitString& s) { return hamming(s, cand) >= min_dist; });
        if (ok) {
            set.push_back(cand);
        }
    }
    if (set.size() < target_size) {
        throw ConstructionError("packing not found: " + std::to_string(set.size()) + " of " +
                                std::to_string(target_size) + " strings after " + std::to_string(budget) + " draws");
    }
    return set;
}

std::size_t HypothesisSet::cell_of(std::span<const double> x) const {
    std::size_t flat = 0, stride = 1;
    for (std::size_t j = 0; j < spec.t_star; ++j) {
        double c = std::floor(x[j] * static_cast<double>(m_n));
        auto idx = static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(m_n - 1)));
        flat += idx * stride;
        stride *= m_n;
    }
    return flat;
}

double HypothesisSet::f(std::size_t index, std::size_t k, std::span<const double> x) const {
    std::size_t cell = cell_of(x);
    if (!W.at(index)[k * cells + cell]) {
        return 0.0;
    }
    std::vector<double> u(spec.t_star);
    std::size_t rest = cell;
    for (std::size_t j = 0; j < spec.t_star; ++j) {
        u[j] = static_cast<double>(rest % m_n) * h_n;
        rest /= m_n;
    }
    return std::pow(psi_u(x, u, h_n, spec.beta_star, spec.b), spec.B_exp);
}

std::vector<double> HypothesisSet::p(std::size_t index, std::span<const double> x) const {
    std::vector<double> out(K);
    double rest = 1.0;
    for (std::size_t k = 0; k + 1 < K; ++k) {
        out[k] = f(index, k, x);
        rest -= out[k];
    }
    out[K - 1] = rest;
    return out;
}

ConditionalProbability HypothesisSet::function(std::size_t index) const {
    return [hs = *this, index](std::span<const double> x) { return hs.p(index, x); };
}

nlohmann::json HypothesisSet::to_json() const {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& s : W) {
        std::string bits;
        for (auto bit : s) {
            bits.push_back(bit ? '1' : '0');
        }
        w.push_back(bits);
    }
    return {{"spec", spec.to_json()},  {"n", n},
            {"K", K},                  {"dim", dim},
            {"m_n", m_n},              {"h_n", h_n},
            {"cells", cells},          {"min_distance", min_distance},
            {"target_size", target_size}, {"size", W.size()},
            {"base_index", base_index}, {"W", w}};
}

HypothesisSet build_hypotheses(double n, std::size_t K, const BumpSpec& spec, std::size_t dim, std::size_t cap,
                               std::uint64_t seed, std::size_t budget) {
    HypothesisSet hs;
    hs.spec = spec;
    hs.n = n;
    hs.K = K;
    hs.dim = dim == 0 ? spec.t_star : dim;
    if (hs.dim < spec.t_star) {
        throw ArgumentError("input dimension is smaller than t*");
    }
    hs.m_n = grid_m_n(spec.rho, static_cast<double>(K), n, spec.beta_dstar, static_cast<double>(spec.t_star));
    hs.h_n = 1.0 / static_cast<double>(hs.m_n);
    double top = static_cast<double>(K - 1) * std::pow(hs.h_n, spec.beta_dstar);
    if (!(top < 1.0)) {
        throw ConstructionError("positivity bound violated: (K-1) h_n^{beta**} = " + std::to_string(top) + " >= 1");
    }
    hs.cells = 1;
    for (std::size_t j = 0; j < spec.t_star; ++j) {
        hs.cells *= hs.m_n;
    }
    double bits = static_cast<double>(hs.cells * (K - 1));
    hs.min_distance = static_cast<std::size_t>(std::ceil(bits / 8.0));
    double target = bits / 8.0 >= 63.0 ? INFINITY : std::ceil(std::exp2(bits / 8.0));
    hs.target_size = static_cast<std::size_t>(std::min(std::max(2.0, target), static_cast<double>(std::max<std::size_t>(cap, 2))));
    hs.W = vg_packing(hs.cells * (K - 1), hs.min_distance, hs.target_size, budget, seed);
    hs.base_index = 0;
    return hs;
}

std::pair<double, double> cell_quadrature(const HypothesisSet& hs, const InputLaw& law,
                                          const std::function<double(std::span<const double>)>& f,
                                          const QuadratureOptions& q) {
    if (law.dim() < hs.spec.t_star) {
        throw ArgumentError("input law dimension is smaller than t*");
    }
    std::size_t t = hs.spec.t_star;
    auto integrate = [&](const GaussRule& rule) {
        std::size_t r = rule.nodes.size();
        std::size_t per_cell = 1;
        for (std::size_t j = 0; j < t; ++j) {
            per_cell *= r;
        }
        std::vector<double> x(std::max(hs.dim, law.dim()), 0.5);
        double total = 0.0;
        for (std::size_t cell = 0; cell < hs.cells; ++cell) {
            double sum = 0.0;
            for (std::size_t node = 0; node < per_cell; ++node) {
                double w = 1.0;
                std::size_t c = cell, nd = node;
                for (std::size_t j = 0; j < t; ++j) {
                    std::size_t ci = c % hs.m_n, ni = nd % r;
                    c /= hs.m_n;
                    nd /= r;
                    x[j] = (static_cast<double>(ci) + rule.nodes[ni]) * hs.h_n;
                    w *= rule.weights[ni];
                }
                sum += w * law.marginal_density(x, t) * f(x);
            }
            total += sum;
        }
        return total * std::pow(hs.h_n, static_cast<double>(t));
    };
    double fine = integrate(gauss_rule(q.order));
    double coarse = integrate(gauss_rule(std::max<std::size_t>(q.order / 2, 1)));
    double err = std::fabs(fine - coarse);
    if (!std::isfinite(fine) || err > q.tolerance) {
        throw NumericError("cell quadrature did not converge: |Q_N - Q_{N/2}| = " + std::to_string(err));
    }
    return {fine, err};
}

nlohmann::json SeparationReport::to_json() const {
    return {{"i", i},
            {"j", j},
            {"ham", ham},
            {"risk", risk},
            {"error", error},
            {"stated_bound", stated_bound},
            {"half_bound", half_bound},
            {"stated_holds", stated_holds},
            {"half_holds", half_holds}};
}

SeparationReport verify_separation(const HypothesisSet& hs, std::size_t i, std::size_t j, const InputLaw& law,
                                   double gamma, const QuadratureOptions& q) {
    SeparationReport rep;
    rep.i = i;
    rep.j = j;
    rep.ham = hamming(hs.W.at(i), hs.W.at(j));
    double t = static_cast<double>(hs.spec.t_star);
    rep.stated_bound = static_cast<double>(rep.ham) * std::pow(hs.h_n, hs.spec.beta_dstar + t) *
                       std::pow(hs.spec.xiB_l1, t) * gamma;
    rep.half_bound = 0.5 * rep.stated_bound;
    if (rep.ham > 0) {
        auto [value, err] = cell_quadrature(
            hs, law,
            [&](std::span<const double> x) {
                std::vector<double> a = hs.p(i, x), b = hs.p(j, x);
                return hellinger_sq(std::span<const double>(a), std::span<const double>(b));
            },
            q);
        rep.risk = value;
        rep.error = err;
    }
    double tol = std::max(rep.error, q.tolerance);
    rep.stated_holds = rep.risk >= rep.stated_bound - tol;
    rep.half_holds = rep.risk >= rep.half_bound - tol;
    return rep;
}

nlohmann::json KlBudgetReport::to_json() const {
    return {{"kl", kl},
            {"error", error},
            {"per_bound", per_bound},
            {"log_size_over_9", log_size_over_9},
            {"aggregate", aggregate},
            {"aggregate_bound", aggregate_bound},
            {"aggregate_bound_alternatives", aggregate_bound_alternatives},
            {"per_holds", per_holds},
            {"aggregate_holds", aggregate_holds},
            {"aggregate_alternatives_holds", aggregate_alternatives_holds}};
}

KlBudgetReport verify_kl_budget(const HypothesisSet& hs, double n, const InputLaw& law, double Gamma,
                                const QuadratureOptions& q) {
    KlBudgetReport rep;
    double t = static_cast<double>(hs.spec.t_star);
    double Km1 = static_cast<double>(hs.K - 1);
    rep.per_bound = 2.0 * n * Gamma * Km1 * Km1 * static_cast<double>(hs.cells) *
                    std::pow(hs.h_n, hs.spec.beta_dstar + t) *
                    (std::pow(hs.spec.xiB_l1, t) + std::pow(hs.spec.xiB_l2_sq, t));
    double size = static_cast<double>(hs.W.size());
    rep.log_size_over_9 = std::log(size) / 9.0;
    rep.aggregate_bound = size * std::log(size) / 9.0;
    rep.aggregate_bound_alternatives = (size - 1.0) * std::log(size - 1.0) / 9.0;
    rep.per_holds = true;
    for (std::size_t w = 0; w < hs.W.size(); ++w) {
        if (w == hs.base_index) {
            rep.kl.push_back(0.0);
            rep.error.push_back(0.0);
            continue;
        }
        auto [value, err] = cell_quadrature(
            hs, law,
            [&](std::span<const double> x) {
                std::vector<double> a = hs.p(w, x), b = hs.p(hs.base_index, x);
                return kl(std::span<const double>(a), std::span<const double>(b));
            },
            q);
        rep.kl.push_back(n * value);
        rep.error.push_back(n * err);
        rep.aggregate += n * value;
        if (n * value > rep.per_bound + n * std::max(err, q.tolerance)) {
            rep.per_holds = false;
        }
    }
    rep.aggregate_holds = rep.aggregate <= rep.aggregate_bound;
    rep.aggregate_alternatives_holds = rep.aggregate <= rep.aggregate_bound_alternatives;
    return rep;
}

} // namespace npmle
