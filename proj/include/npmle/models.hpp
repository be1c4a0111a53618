#pragma once

#include <npmle/simplex.hpp>

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace npmle {

// Integer part used by the Hoelder norm: the largest integer strictly below beta,
// so beta = 1 gives the sup norm plus the Lipschitz quotient.
int hoelder_floor(double beta);

// A univariate building block on [0,1] with certified smoothness metadata.
struct HoelderBlock {
    std::string name;
    double beta = 1.0;
    // Analytic upper bound on the C^beta([0,1]) norm.
    double radius = 0.0;
    // derivative(x, j) is the j-th derivative; j = 0 is the function itself.
    std::function<double(double, int)> derivative;
    nlohmann::json params;

    double operator()(double x) const { return derivative(x, 0); }
};

// Catalog:
//   polynomial  {"coefficients": [a0, a1, ...], "beta": b}           sum_j a_j x^j
//   cusp        {"center": c, "beta": b in (0,1], "scale": a, "shift": s}   a |x - c|^b + s
//   sinusoid    {"amplitude": a, "frequency": w, "phase": p, "shift": s, "beta": b}   a sin(w x + p) + s
//   zero        {"beta": b}
HoelderBlock library_hoelder(const std::string& name, const nlohmann::json& params);

HoelderBlock polynomial_block(std::vector<double> coefficients, double beta);
HoelderBlock cusp_block(double center, double beta, double scale = 1.0, double shift = 0.0);
HoelderBlock sinusoid_block(double amplitude, double frequency, double phase, double beta, double shift = 0.0);
HoelderBlock zero_block(double beta);

// Empirical C^beta norm on an equispaced probe grid of [0,1]: sup norms of the
// derivatives of order <= hoelder_floor(beta) plus the largest Hoelder quotient
// of the top derivative over all grid pairs.
double hoelder_norm_scan(const std::function<double(double, int)>& derivative, double beta,
                         std::size_t grid_points = 257);

struct CompositionSpec {
    std::size_t r = 0;
    std::vector<std::size_t> d; // d_0 .. d_{r+1}
    std::vector<std::size_t> t; // t_0 .. t_r
    std::vector<double> beta;   // beta_0 .. beta_r
    double Q = 1.0;
    std::size_t K = 2;

    // Throws ArgumentError on inconsistent lengths, t_i > d_i, nonpositive beta, K < 2 or KQ < 1.
    void validate() const;
    nlohmann::json to_json() const;
    static CompositionSpec from_json(const nlohmann::json& j);
};

std::vector<double> effective_smoothness(const CompositionSpec& spec);
std::vector<double> effective_smoothness(std::span<const double> beta);

struct RateValue {
    double value = 1.0;
    std::size_t index = 0;
    // beta_i* / (beta_i* + t_i) at the argmax.
    double exponent = 0.0;
};

// max_i n^{-beta_i* / (beta_i* + t_i)}; ties (relative tolerance 1e-12 on the
// exponent) go to the smallest index.
RateValue rate_phi_n(const CompositionSpec& spec, double n);
RateValue rate_phi_n(std::span<const double> beta, std::span<const std::size_t> t, double n);

// Q_r prod_{l<r} (2 Q_l)^{beta_{l+1}} sum_{i=0}^{r} eps_i^{prod_{l>i} min(beta_l, 1)}.
double composition_error_bound(std::span<const double> Q, std::span<const double> beta, std::span<const double> eps);

// An evaluable conditional class probability with composition metadata. Cheap to
// copy; immutable after construction.
class TrueModel {
public:
    TrueModel(CompositionSpec spec, std::string label, ConditionalProbability eval);

    std::vector<double> operator()(std::span<const double> x) const { return (*eval_)(x); }
    const ConditionalProbability& function() const { return *eval_; }
    const CompositionSpec& spec() const { return *spec_; }
    const std::string& label() const { return label_; }
    std::size_t dim() const { return spec_->d.front(); }
    std::size_t classes() const { return spec_->K; }
    std::vector<double> beta_star() const { return effective_smoothness(*spec_); }
    RateValue phi(double n) const { return rate_phi_n(*spec_, n); }

private:
    std::shared_ptr<const CompositionSpec> spec_;
    std::string label_;
    std::shared_ptr<const ConditionalProbability> eval_;
};

// eta_k(x) = softmax_k(sum_i f_ki(x_i)) for a K x d table of scores sharing one beta.
// Each score must stay in [-Q, Q] on a 1001-point probe grid; Q defaults to the
// largest declared block radius. The recorded spec is the embedding
// G'(2, (d, d, 1, 1), (1, d, 1), (beta, max(beta,1) d, 1), (Q + 1) d, K).
TrueModel make_gam(const std::vector<std::vector<HoelderBlock>>& scores, double Q = 0.0,
                   std::string label = "gam");

// One stage g_i of a composition, given on its natural domain: [0,1]^{d_0} for
// i = 0 and [-Q_{i-1}, Q_{i-1}]^{d_i} afterwards.
struct CompositionStage {
    std::size_t in_dim = 1;
    std::size_t out_dim = 1;
    std::size_t active = 1; // t_i
    double beta = 1.0;
    double Q = 1.0; // sup bound of the stage output and Hoelder radius
    std::function<void(std::span<const double>, std::span<double>)> eval;
};

enum class CompositionHead { softmax, simplex };

// Chains the stages through the rescaled maps h_0 = g_0/(2Q_0) + 1/2,
// h_i(x) = g_i(2 Q_{i-1} x - Q_{i-1})/(2 Q_i) + 1/2, h_r(x) = g_r(2 Q_{r-1} x - Q_{r-1}),
// which take values in [0,1] whenever each g_i stays within [-Q_i, Q_i]; that range
// is checked on every evaluation. The last stage produces K values that are either
// passed through softmax or taken as a probability vector.
TrueModel make_composition(std::vector<CompositionStage> stages, std::size_t K, CompositionHead head,
                           std::string label = "composition");

// Model catalog addressable by name:
//   "gam"          {"scores": [[block, ...], ...], "Q": q}   block = {"name": ..., params...}
//   "stock_gam"    the K=2, d=1, beta=1 cusp/sinusoid GAM used by the rate study
//   "uniform"      {"K": k, "d": d}
//   "logistic"     {"slope": a}  K=2, d=1, eta_1 = e^{a x} / (e^{a x} + 1)
TrueModel make_model(const std::string& name, const nlohmann::json& params = nlohmann::json::object());
TrueModel make_model(const nlohmann::json& ref);
inline TrueModel make_model(const char* name) { return make_model(std::string(name)); }

} // namespace npmle
