#pragma once

#include <npmle/input_law.hpp>
#include <npmle/models.hpp>

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace npmle {

// xi(z) = b 2^{2 beta} z^beta (1 - z)^beta on [0,1], zero elsewhere.
double bump_xi(double z, double beta_star, double b);
// j-th derivative of xi on (0,1) by the Leibniz rule.
double bump_xi_derivative(double z, double beta_star, double b, int j);
// C^beta(R) norm of xi with b = 1 estimated on a probe grid refined toward the
// support ends; the norm is linear in b.
double bump_hoelder_norm(double beta_star, std::size_t grid_points = 1601);
// Largest b whose bump passes the probe-grid Hoelder scan with radius 1.
double bump_normalizer(double beta_star);

// psi_u(x) = h^beta prod_j xi((x_j - u_j) / h) over the first u.size() coordinates.
double psi_u(std::span<const double> x, std::span<const double> u, double h, double beta_star, double b);

// ceil(rho K^{1 / beta**} n^{1 / (beta** + t*)}).
std::size_t grid_m_n(double rho, double K, double n, double beta_dstar, double t_star);

struct BumpSpec {
    double beta_star = 1.0;
    double beta_dstar = 1.0; // beta* B_exp
    std::size_t t_star = 1;
    double B_exp = 1.0;
    double b = 0.2;
    double rho = 1.0;
    double xi_sup = 0.2;      // sup |xi| = b, recorded since only the Hoelder ball is enforced
    double xiB_l1 = 0.0;      // || xi^B ||_1
    double xiB_l2_sq = 0.0;   // || xi^B ||_2^2
    double Gamma = 1.0;       // density upper bound used in the smallness condition

    nlohmann::json to_json() const;
};

// Left side n (K-1) h^{beta** + t*} and right side 1 / (144 Gamma log2(e) (||xi^B||_1^{t*} + ||xi^B||_2^{2 t*})).
struct Smallness {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds() const { return lhs <= rhs; }
};
Smallness smallness(const BumpSpec& spec, double n, double K);

// Bump parameters for given (beta*, t*, B): b from the Hoelder scan, norms of
// xi^B by tanh-sinh quadrature, and the smallest rho >= 1 on a 0.01 grid that
// satisfies the smallness condition and m_n^{beta**} - (K - 1) >= 1.
BumpSpec make_bump_spec(double beta_star, std::size_t t_star, double B_exp, double n, std::size_t K, double Gamma);
// Same, with (beta*, beta**, t*, B) taken at the slowest stage of a composition spec.
BumpSpec make_bump_spec(const CompositionSpec& spec, double n, double Gamma);

using BitString = std::vector<std::uint8_t>;

std::size_t hamming(const BitString& a, const BitString& b);

// Greedy random packing: starts from the all-ones string and accepts uniform
// random strings (stream (seed, "minimax.packing")) at distance >= min_dist
// from every accepted one. Raises ConstructionError when `budget` draws do not
// reach target_size.
std::vector<BitString> vg_packing(std::size_t length, std::size_t min_dist, std::size_t target_size,
                                  std::size_t budget, std::uint64_t seed);

struct HypothesisSet {
    BumpSpec spec;
    double n = 0.0;
    std::size_t K = 2;
    std::size_t dim = 1; // input dimension, >= t*
    std::size_t m_n = 1;
    double h_n = 1.0;
    std::size_t cells = 1;      // m_n^{t*}
    std::size_t min_distance = 1;
    std::size_t target_size = 2;
    // Row-major (K-1) x cells selection matrices; index 0 is the all-ones base.
    std::vector<BitString> W;
    std::size_t base_index = 0;

    // p_W(x) = (f_{w_1}, ..., f_{w_{K-1}}, 1 - sum_k f_{w_k}).
    std::vector<double> p(std::size_t index, std::span<const double> x) const;
    // f_w at x for row k of hypothesis `index`.
    double f(std::size_t index, std::size_t k, std::span<const double> x) const;
    ConditionalProbability function(std::size_t index) const;
    // Grid cell of x (multi-index flattened with the first coordinate fastest).
    std::size_t cell_of(std::span<const double> x) const;

    nlohmann::json to_json() const;
};

// The packing target is max(2, ceil(2^{cells (K-1) / 8})) capped at `cap`, the
// minimum distance ceil(cells (K-1) / 8). Raises ConstructionError naming the
// bound when (K-1) h^{beta**} >= 1.
HypothesisSet build_hypotheses(double n, std::size_t K, const BumpSpec& spec, std::size_t dim = 0,
                               std::size_t cap = 64, std::uint64_t seed = 0, std::size_t budget = 100000);

struct QuadratureOptions {
    // Gauss-Legendre order per cell and axis; the error estimate compares against half the order.
    std::size_t order = 30;
    double tolerance = 1e-6;
};

// Integrates f over [0,1]^{t*} against the input density (marginal on the first t* coordinates),
// cell by cell on the bump grid. Returns {value, |Q_order - Q_half|}.
std::pair<double, double> cell_quadrature(const HypothesisSet& hs, const InputLaw& law,
                                          const std::function<double(std::span<const double>)>& f,
                                          const QuadratureOptions& q);

struct SeparationReport {
    std::size_t i = 0, j = 0;
    std::size_t ham = 0;
    double risk = 0.0;
    double error = 0.0;
    // Ham h^{beta** + t*} ||xi^B||_1^{t*} gamma, as stated.
    double stated_bound = 0.0;
    // The same with the 1/2 of the squared Hellinger distance kept.
    double half_bound = 0.0;
    bool stated_holds = false;
    bool half_holds = false;

    nlohmann::json to_json() const;
};

SeparationReport verify_separation(const HypothesisSet& hs, std::size_t i, std::size_t j, const InputLaw& law,
                                   double gamma, const QuadratureOptions& q = {});

struct KlBudgetReport {
    std::vector<double> kl;       // n E[KL(p_W || p_0)] per hypothesis (base gives 0)
    std::vector<double> error;
    double per_bound = 0.0;       // 2 n Gamma (K-1)^2 m^{t*} h^{beta**+t*} (||xi^B||_1^{t*} + ||xi^B||_2^{2t*})
    double log_size_over_9 = 0.0; // log|W| / 9
    double aggregate = 0.0;       // sum over non-base hypotheses
    double aggregate_bound = 0.0; // |W| log|W| / 9
    double aggregate_bound_alternatives = 0.0; // M log M / 9 with M = |W| - 1
    bool per_holds = false;
    bool aggregate_holds = false;
    bool aggregate_alternatives_holds = false;

    nlohmann::json to_json() const;
};

KlBudgetReport verify_kl_budget(const HypothesisSet& hs, double n, const InputLaw& law, double Gamma,
                                const QuadratureOptions& q = {});

} // namespace npmle
