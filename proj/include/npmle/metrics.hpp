#pragma once

#include <npmle/input_law.hpp>
#include <npmle/simplex.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>

namespace npmle {

// Sentinel returned by kl() when absolute continuity fails.
inline constexpr double KL_INFINITY = std::numeric_limits<double>::infinity();

// Pointwise divergences. The span overloads check only the dimension; callers
// guarantee the arguments lie on the simplex.
double hellinger_sq(const SimplexVector& p, const SimplexVector& q);
double hellinger_sq(std::span<const double> p, std::span<const double> q);
double kl(const SimplexVector& p, const SimplexVector& q);
double kl(std::span<const double> p, std::span<const double> q);
double truncated_kl(const SimplexVector& p, const SimplexVector& q, double B);
double truncated_kl(std::span<const double> p, std::span<const double> q, double B);

enum class RiskMethod { automatic, mc, quadrature };

std::string to_string(RiskMethod method);
RiskMethod risk_method_from_string(const std::string& name);

struct RiskOptions {
    // automatic: quadrature for d <= 3, Monte Carlo otherwise.
    RiskMethod method = RiskMethod::automatic;
    // Monte Carlo sample count, or total quadrature cell count (rounded to a
    // tensor grid). Unset selects the defaults 2048 / 128^2 / 32^3 / 1e5.
    std::optional<std::size_t> budget;
    std::uint64_t seed = 0;
};

struct RiskEstimate {
    double value = 0.0;
    // Standard error (mc) or |Q_N - Q_{N/2}| against the half-resolution grid (quadrature).
    double error = 0.0;
    RiskMethod method = RiskMethod::quadrature;
    std::size_t samples = 0;
};

inline constexpr std::size_t DEFAULT_MC_BUDGET = 100000;

// Cells per axis of the default midpoint grid for dimension d <= 3.
std::size_t default_grid_cells(std::size_t dim);

// Integrates f against P_X with the method selected by options.
RiskEstimate integrate(const std::function<double(std::span<const double>)>& f, const InputLaw& law,
                       const RiskOptions& options = {});

// E_X[H^2(eta(X), phat(X))]. Outputs of either function off the simplex by more
// than SIMPLEX_TOLERANCE raise DataError.
RiskEstimate risk(const ConditionalProbability& eta, const ConditionalProbability& phat, const InputLaw& law,
                  const RiskOptions& options = {});
// E_X[KL(eta(X) || phat(X))]; value is KL_INFINITY if any evaluated point is infinite.
RiskEstimate risk_kl(const ConditionalProbability& eta, const ConditionalProbability& phat, const InputLaw& law,
                     const RiskOptions& options = {});
RiskEstimate risk_truncated_kl(const ConditionalProbability& eta, const ConditionalProbability& phat, double B,
                               const InputLaw& law, const RiskOptions& options = {});

// rho_M^2(g) = 2 M^2 E[e^{|g|/M} - 1 - |g|/M] with Y ~ eta(X) and X ~ P_X. The
// label expectation is taken exactly as the eta-weighted sum over classes.
RiskEstimate bernstein_seminorm_sq(const LabelFunction& g, double M, const ConditionalProbability& eta,
                                   const InputLaw& law, const RiskOptions& options = {});

// Closed form 2 M^2 (e^{|c|/M} - 1 - |c|/M) of the seminorm of a constant.
double bernstein_constant(double c, double M);

// c_Gamma = 2 (e^Gamma - 1 - Gamma) / (e^{-Gamma} - 1)^2.
double bernstein_c_gamma(double Gamma);
// c_Gamma^2 (e^x - 1)^2 - 2 (e^{|x|} - 1 - |x|); nonnegative for x >= -Gamma.
double bernstein_pointwise_slack(double x, double Gamma);

// g_p(x, k) = 1/2 log((p_k + pt_k) / (2 pt_k)) when pt_k > 0, else 0.
LabelFunction gp_function(ConditionalProbability p, ConditionalProbability ptilde);
double gp_value(double p_k, double ptilde_k);

// Checks an evaluated conditional probability; throws DataError naming x when off the simplex.
void require_simplex(std::span<const double> values, std::span<const double> x, const char* what);

} // namespace npmle
