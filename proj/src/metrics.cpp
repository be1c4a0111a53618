#include <npmle/metrics.hpp>

#include <npmle/errors.hpp>
#include <npmle/rng.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace npmle {

namespace {

void require_same_size(std::size_t a, std::size_t b) {
    if (a != b) {
        throw ArgumentError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

// Midpoint rule on an m^d tensor grid, weighted by the input density.
double midpoint(const std::function<double(std::span<const double>)>& f, const InputLaw& law, std::size_t m) {
    std::size_t d = law.dim();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    double h = 1.0 / static_cast<double>(m);
    double sum = 0.0;
    bool infinite = false;
    while (true) {
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = (static_cast<double>(idx[j]) + 0.5) * h;
        }
        double w = law.density(x);
        if (w > 0.0) {
            double v = f(x);
            if (std::isinf(v)) {
                infinite = true;
            } else {
                sum += w * v;
            }
        }
        std::size_t j = 0;
        while (j < d && ++idx[j] == m) {
            idx[j] = 0;
            ++j;
        }
        if (j == d) {
            break;
        }
    }
    if (infinite) {
        return KL_INFINITY;
    }
    return sum * std::pow(h, static_cast<double>(d));
}

} // namespace

double hellinger_sq(std::span<const double> p, std::span<const double> q) {
    require_same_size(p.size(), q.size());
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        double diff = std::sqrt(p[k]) - std::sqrt(q[k]);
        s += diff * diff;
    }
    return std::min(0.5 * s, 1.0);
}

double hellinger_sq(const SimplexVector& p, const SimplexVector& q) {
    return hellinger_sq(p.values(), q.values());
}

double kl(std::span<const double> p, std::span<const double> q) {
    require_same_size(p.size(), q.size());
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] <= 0.0) {
            continue;
        }
        if (q[k] <= 0.0) {
            return KL_INFINITY;
        }
        s += p[k] * std::log(p[k] / q[k]);
    }
    // Rounding can leave a tiny negative total for p close to q.
    return std::max(s, 0.0);
}

double kl(const SimplexVector& p, const SimplexVector& q) {
    return kl(p.values(), q.values());
}

double truncated_kl(std::span<const double> p, std::span<const double> q, double B) {
    if (!(B > 0.0)) {
        throw ArgumentError("truncation level B must be positive");
    }
    require_same_size(p.size(), q.size());
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] <= 0.0) {
            continue;
        }
        double ratio = q[k] <= 0.0 ? B : std::min(B, std::log(p[k] / q[k]));
        s += p[k] * ratio;
    }
    return s;
}

double truncated_kl(const SimplexVector& p, const SimplexVector& q, double B) {
    return truncated_kl(p.values(), q.values(), B);
}

std::string to_string(RiskMethod method) {
    switch (method) {
    case RiskMethod::mc:
        return "mc";
    case RiskMethod::quadrature:
        return "quadrature";
    default:
        return "auto";
    }
}

RiskMethod risk_method_from_string(const std::string& name) {
    if (name == "mc") {
        return RiskMethod::mc;
    }
    if (name == "quadrature") {
        return RiskMethod::quadrature;
    }
    if (name == "auto") {
        return RiskMethod::automatic;
    }
    throw ArgumentError("unknown risk method '" + name + "'");
}

std::size_t default_grid_cells(std::size_t dim) {
    switch (dim) {
    case 1:
        return 2048;
    case 2:
        return 128;
    case 3:
        return 32;
    default:
        throw ArgumentError("quadrature is available for d <= 3 only");
    }
}

RiskEstimate integrate(const std::function<double(std::span<const double>)>& f, const InputLaw& law,
                       const RiskOptions& options) {
    if (options.budget && *options.budget == 0) {
        throw ArgumentError("risk budget must be at least 1");
    }
    std::size_t d = law.dim();
    RiskMethod method = options.method;
    if (method == RiskMethod::automatic) {
        method = d <= 3 ? RiskMethod::quadrature : RiskMethod::mc;
    }
    RiskEstimate est;
    est.method = method;
    if (method == RiskMethod::quadrature) {
        std::size_t m = default_grid_cells(d);
        if (options.budget) {
            m = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(*options.budget), 1.0 / d) + 1e-9));
            m = std::max<std::size_t>(m, 1);
        }
        est.value = midpoint(f, law, m);
        est.samples = static_cast<std::size_t>(std::pow(static_cast<double>(m), static_cast<double>(d)) + 0.5);
        if (std::isinf(est.value)) {
            est.error = KL_INFINITY;
        } else if (m >= 2) {
            double coarse = midpoint(f, law, m / 2);
            est.error = std::isinf(coarse) ? 0.0 : std::fabs(est.value - coarse);
        } else {
            est.error = KL_INFINITY;
        }
        return est;
    }
    std::size_t n = options.budget.value_or(DEFAULT_MC_BUDGET);
    RandomStream stream(options.seed, "metrics.mc");
    std::vector<double> x(d);
    // Welford accumulation keeps the variance stable for large n.
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        law.sample(stream, x);
        double v = f(x);
        if (std::isinf(v)) {
            est.value = KL_INFINITY;
            est.error = KL_INFINITY;
            est.samples = i + 1;
            return est;
        }
        double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    est.value = mean;
    est.error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : KL_INFINITY;
    est.samples = n;
    return est;
}

void require_simplex(std::span<const double> values, std::span<const double> x, const char* what) {
    if (!on_simplex(values)) {
        std::ostringstream os;
        os.precision(17);
        os << what << " is off the simplex at x = (";
        for (std::size_t j = 0; j < x.size(); ++j) {
            os << (j ? ", " : "") << x[j];
        }
        os << ")";
        throw DataError(os.str());
    }
}

namespace {

template<typename Divergence>
RiskEstimate divergence_risk(const ConditionalProbability& eta, const ConditionalProbability& phat,
                             const InputLaw& law, const RiskOptions& options, Divergence div) {
    auto f = [&](std::span<const double> x) {
        std::vector<double> e = eta(x);
        std::vector<double> p = phat(x);
        require_simplex(e, x, "eta");
        require_simplex(p, x, "phat");
        return div(e, p);
    };
    return integrate(f, law, options);
}

} // namespace

RiskEstimate risk(const ConditionalProbability& eta, const ConditionalProbability& phat, const InputLaw& law,
                  const RiskOptions& options) {
    RiskEstimate est = divergence_risk(eta, phat, law, options, [](const std::vector<double>& e,
                                                                    const std::vector<double>& p) {
        return hellinger_sq(std::span<const double>(e), std::span<const double>(p));
    });
    est.value = std::clamp(est.value, 0.0, 1.0);
    return est;
}

RiskEstimate risk_kl(const ConditionalProbability& eta, const ConditionalProbability& phat, const InputLaw& law,
                     const RiskOptions& options) {
    return divergence_risk(eta, phat, law, options, [](const std::vector<double>& e, const std::vector<double>& p) {
        return kl(std::span<const double>(e), std::span<const double>(p));
    });
}

RiskEstimate risk_truncated_kl(const ConditionalProbability& eta, const ConditionalProbability& phat, double B,
                               const InputLaw& law, const RiskOptions& options) {
    if (!(B > 0.0)) {
        throw ArgumentError("truncation level B must be positive");
    }
    return divergence_risk(eta, phat, law, options, [B](const std::vector<double>& e, const std::vector<double>& p) {
        return truncated_kl(std::span<const double>(e), std::span<const double>(p), B);
    });
}

double bernstein_constant(double c, double M) {
    double a = std::fabs(c) / M;
    return 2.0 * M * M * (std::expm1(a) - a);
}

RiskEstimate bernstein_seminorm_sq(const LabelFunction& g, double M, const ConditionalProbability& eta,
                                   const InputLaw& law, const RiskOptions& options) {
    if (!(M > 0.0)) {
        throw ArgumentError("Bernstein scale M must be positive");
    }
    auto f = [&](std::span<const double> x) {
        std::vector<double> e = eta(x);
        require_simplex(e, x, "eta");
        double s = 0.0;
        for (std::size_t k = 0; k < e.size(); ++k) {
            if (e[k] <= 0.0) {
                continue;
            }
            double v = g(x, k);
            if (!std::isfinite(v)) {
                throw DataError("g is not finite at class " + std::to_string(k + 1));
            }
            s += e[k] * bernstein_constant(v, M);
        }
        return s;
    };
    return integrate(f, law, options);
}

double gp_value(double p_k, double ptilde_k) {
    if (!(ptilde_k > 0.0)) {
        return 0.0;
    }
    return 0.5 * std::log((p_k + ptilde_k) / (2.0 * ptilde_k));
}

LabelFunction gp_function(ConditionalProbability p, ConditionalProbability ptilde) {
    return [p = std::move(p), ptilde = std::move(ptilde)](std::span<const double> x, std::size_t k) {
        std::vector<double> a = p(x);
        std::vector<double> b = ptilde(x);
        if (k >= a.size() || k >= b.size()) {
            throw ArgumentError("class index out of range");
        }
        return gp_value(a[k], b[k]);
    };
}

double bernstein_c_gamma(double Gamma) {
    if (!(Gamma > 0.0)) {
        throw ArgumentError("Gamma must be positive");
    }
    double den = std::expm1(-Gamma);
    return 2.0 * (std::expm1(Gamma) - Gamma) / (den * den);
}

double bernstein_pointwise_slack(double x, double Gamma) {
    double c = bernstein_c_gamma(Gamma);
    double e = std::expm1(x);
    return c * c * e * e - 2.0 * (std::expm1(std::fabs(x)) - std::fabs(x));
}

} // namespace npmle
