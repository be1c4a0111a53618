#pragma once

#include <npmle/models.hpp>
#include <npmle/simplex.hpp>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace npmle {

// Inputs of the oracle-inequality calculators. Unnamed universal constants are
// explicit and default to 1.
struct BoundInputs {
    double s = 1.0;     // parameter count
    double L = 1.0;     // depth
    double B = 1.0;     // weight bound
    double m_inf = 1.0; // max width
    double K = 2.0;
    double n = 1.0;
    double c0_sq = 1.0;
    double A = 1.0;
    double c = 1.0;

    void validate() const;
};

// log covering number of the network class: 2 s L ln((B v 1)(m_inf + 1)) + s ln(L / delta).
double covering_bound_dnn(double delta, double L, double m_inf, double B, double s);

// log N_{p,B}(delta) <= log N(delta / (2 q^{1/p}), ||.||_inf).
double bracketing_from_covering(double delta, double p, double q_total,
                                const std::function<double(double)>& covering_log);

// delta sqrt(2 s L) (sqrt(ln(A / delta)) + sqrt(pi)); requires 0 < delta < A.
double entropy_integral_bound(double delta, double s, double L, double A);

// sqrt(2 s L) (sqrt(ln(sqrt(n) A)) + sqrt(2 pi)) / sqrt(n); requires sqrt(n) A > 1.
double critical_radius(double s, double L, double A, double n);

// 514 (1 + c0^2)(delta_n^2 + approx_risk) + c^3 / n.
double oracle_rhs(double c0_sq, double delta_n, double approx_risk, double n, double c = 1.0);

// sqrt(2)(K - 1) sqrt(K) (B v 1)(m_inf + 1) L / max_i N^{-beta_i* / t_i}.
double A_constant(double K, double B, double m_inf, double L, double N, std::span<const double> beta_star,
                  std::span<const std::size_t> t);

struct AssumptionReport {
    // max over probes and classes of eta_k(x) / ptilde_k(x); infinity on a violation.
    double c0_sq = 0.0;
    bool violated = false;
    std::vector<double> x; // first offending probe
    std::size_t k = 0;     // its class (0-based)
    std::vector<double> argmax_x;
    std::size_t argmax_k = 0;
};

AssumptionReport assumption_ratio(const ConditionalProbability& eta, const ConditionalProbability& ptilde,
                                  const std::vector<std::vector<double>>& probes);
// Equispaced tensor probe grid with `per_axis` points per coordinate, endpoints included.
std::vector<std::vector<double>> probe_grid(std::size_t dim, std::size_t per_axis);

// max_i n^{-(1+alpha) beta_i* / ((1+alpha) beta_i* + t_i)}.
double svb_rate(double alpha, const CompositionSpec& spec, double n);
// max_i K^{(2 beta_i* + 3 t_i) / (beta_i* + t_i)} n^{-beta_i* / (beta_i* + t_i)}; K from the argument.
double k_rate(const CompositionSpec& spec, double n, double K);
double k_rate(const CompositionSpec& spec, double n);

struct BesovSmoothness {
    double tilde = 0.0; // (sum_j 1/beta_j)^{-1}
    double bar = 0.0;   // max_j beta_j
};
BesovSmoothness besov_effective(std::span<const double> beta);
// n^{-1 / (beta_tilde + 1)}.
double besov_rate(double beta_tilde, double n);

// The oracle bound along the architecture prescription, used to check that the
// calculators compose to phi_n up to logarithms. N_i, s and the approximation
// term follow the proof with every hidden constant set to 1.
struct TheoryPipeline {
    double n = 0.0;
    double phi = 0.0;
    double N = 0.0;
    double s = 0.0;
    double L = 0.0;
    double m_inf = 0.0;
    double B = 0.0;
    double A = 0.0;
    double delta_n = 0.0;
    double approx_risk = 0.0;
    double rhs = 0.0;
};

// s_form selects s = N^2 ln N (grid) or s = max_i n^{t_i / (beta_i* + t_i)} ln n (rate).
enum class SparsityForm { grid, rate };
TheoryPipeline theory_pipeline(const CompositionSpec& spec, double n, SparsityForm form = SparsityForm::rate);

// Basic inequality for a finite family of constant conditional probabilities,
// where P and P_n expectations are closed forms. phat is the exact ERM over the
// family (ties to the smallest index); ptilde is candidates[ptilde_index].
struct BasicInequalityCheck {
    std::size_t phat_index = 0;
    double lhs = 0.0;              // R((phat + ptilde)/2, ptilde)
    double empirical_process = 0.0; // (P_n - P) g_phat
    double cross_term = 0.0;       // 2 (1 + c0) sqrt(R((phat+ptilde)/2, ptilde) R(ptilde, eta))
    double c0 = 0.0;
    double rhs = 0.0;
    bool holds() const { return lhs <= rhs + 1e-12; }
};
BasicInequalityCheck basic_inequality_constant(const std::vector<std::vector<double>>& candidates,
                                               std::size_t ptilde_index, std::span<const double> eta,
                                               std::span<const std::size_t> labels);

// OLS slope of ln(value) against ln(n).
double loglog_slope(std::span<const double> n, std::span<const double> value);

} // namespace npmle
