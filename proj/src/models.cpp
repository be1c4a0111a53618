#include <npmle/models.hpp>

#include <npmle/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace npmle {

int hoelder_floor(double beta) {
    if (!(beta > 0.0)) {
        throw ArgumentError("smoothness must be positive");
    }
    return static_cast<int>(std::ceil(beta)) - 1;
}

namespace {

double abs_sum(const std::vector<double>& c) {
    double s = 0.0;
    for (double v : c) {
        s += std::fabs(v);
    }
    return s;
}

std::vector<double> differentiate(const std::vector<double>& c) {
    std::vector<double> out;
    for (std::size_t j = 1; j < c.size(); ++j) {
        out.push_back(c[j] * static_cast<double>(j));
    }
    return out;
}

double horner(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) {
        v = v * x + c[j];
    }
    return v;
}

[[noreturn]] void no_derivative(const std::string& name, int j) {
    throw ArgumentError(name + " block has no derivative of order " + std::to_string(j));
}

} // namespace

HoelderBlock polynomial_block(std::vector<double> coefficients, double beta) {
    int fl = hoelder_floor(beta);
    std::vector<std::vector<double>> derivs{coefficients};
    for (int j = 0; j <= fl; ++j) {
        derivs.push_back(differentiate(derivs.back()));
    }
    // On [0,1] the sup of a polynomial is at most the sum of |coefficients|; the
    // Hoelder quotient of the top derivative is at most the sup of the next one.
    double radius = 0.0;
    for (int j = 0; j <= fl + 1; ++j) {
        radius += abs_sum(derivs[j]);
    }
    HoelderBlock b;
    b.name = "polynomial";
    b.beta = beta;
    b.radius = radius;
    b.params = {{"coefficients", coefficients}, {"beta", beta}};
    b.derivative = [coefficients = std::move(coefficients)](double x, int j) {
        std::vector<double> c = coefficients;
        for (int i = 0; i < j; ++i) {
            c = differentiate(c);
        }
        return horner(c, x);
    };
    return b;
}

HoelderBlock cusp_block(double center, double beta, double scale, double shift) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw ArgumentError("cusp smoothness must lie in (0, 1]");
    }
    HoelderBlock b;
    b.name = "cusp";
    b.beta = beta;
    // |x - c|^beta is beta-Hoelder with constant 1 for beta <= 1.
    double reach = std::max(std::fabs(center), std::fabs(1.0 - center));
    b.radius = std::fabs(scale) * (std::pow(reach, beta) + 1.0) + std::fabs(shift);
    b.params = {{"center", center}, {"beta", beta}, {"scale", scale}, {"shift", shift}};
    b.derivative = [=](double x, int j) {
        if (j != 0) {
            no_derivative("cusp", j);
        }
        return scale * std::pow(std::fabs(x - center), beta) + shift;
    };
    return b;
}

HoelderBlock sinusoid_block(double amplitude, double frequency, double phase, double beta, double shift) {
    int fl = hoelder_floor(beta);
    double alpha = beta - fl;
    double a = std::fabs(amplitude), w = std::fabs(frequency);
    double radius = std::fabs(shift);
    for (int j = 0; j <= fl; ++j) {
        radius += a * std::pow(w, j);
    }
    // |g(x) - g(y)| <= min(2 a w^fl, a w^{fl+1} |x - y|) for g the top derivative.
    radius += a * std::pow(w, fl) * std::pow(2.0, 1.0 - alpha) * std::pow(w, alpha);
    HoelderBlock b;
    b.name = "sinusoid";
    b.beta = beta;
    b.radius = radius;
    b.params = {{"amplitude", amplitude}, {"frequency", frequency}, {"phase", phase}, {"beta", beta},
                {"shift", shift}};
    b.derivative = [=](double x, int j) {
        double v = amplitude * std::pow(frequency, j) * std::sin(frequency * x + phase + j * std::numbers::pi / 2);
        return j == 0 ? v + shift : v;
    };
    return b;
}

HoelderBlock zero_block(double beta) {
    hoelder_floor(beta);
    HoelderBlock b;
    b.name = "zero";
    b.beta = beta;
    b.radius = 0.0;
    b.params = {{"beta", beta}};
    b.derivative = [](double, int) { return 0.0; };
    return b;
}

HoelderBlock library_hoelder(const std::string& name, const nlohmann::json& p) {
    try {
        if (name == "polynomial") {
            return polynomial_block(p.at("coefficients").get<std::vector<double>>(), p.value("beta", 1.0));
        }
        if (name == "cusp") {
            return cusp_block(p.value("center", 0.5), p.value("beta", 1.0), p.value("scale", 1.0),
                              p.value("shift", 0.0));
        }
        if (name == "sinusoid") {
            return sinusoid_block(p.value("amplitude", 1.0), p.value("frequency", 1.0), p.value("phase", 0.0),
                                  p.value("beta", 1.0), p.value("shift", 0.0));
        }
        if (name == "zero") {
            return zero_block(p.value("beta", 1.0));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError("bad parameters for block '" + name + "': " + e.what());
    }
    throw ArgumentError("unknown Hoelder block '" + name + "'");
}

double hoelder_norm_scan(const std::function<double(double, int)>& derivative, double beta, std::size_t grid_points) {
    if (grid_points < 2) {
        throw ArgumentError("probe grid needs at least two points");
    }
    int fl = hoelder_floor(beta);
    double alpha = beta - fl;
    std::vector<double> xs(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) {
        xs[i] = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    }
    double norm = 0.0;
    std::vector<double> top(grid_points);
    for (int j = 0; j <= fl; ++j) {
        double sup = 0.0;
        for (std::size_t i = 0; i < grid_points; ++i) {
            double v = derivative(xs[i], j);
            sup = std::max(sup, std::fabs(v));
            if (j == fl) {
                top[i] = v;
            }
        }
        norm += sup;
    }
    double quotient = 0.0;
    for (std::size_t i = 0; i < grid_points; ++i) {
        for (std::size_t k = i + 1; k < grid_points; ++k) {
            quotient = std::max(quotient, std::fabs(top[i] - top[k]) / std::pow(xs[k] - xs[i], alpha));
        }
    }
    return norm + quotient;
}

void CompositionSpec::validate() const {
    if (d.size() != r + 2 || t.size() != r + 1 || beta.size() != r + 1) {
        throw ArgumentError("composition spec needs r+2 dimensions and r+1 arities and smoothness values");
    }
    for (std::size_t i = 0; i <= r; ++i) {
        if (t[i] == 0 || t[i] > d[i]) {
            throw ArgumentError("arity t_" + std::to_string(i) + " must lie in [1, d_" + std::to_string(i) + "]");
        }
        if (!(beta[i] > 0.0)) {
            throw ArgumentError("smoothness beta_" + std::to_string(i) + " must be positive");
        }
    }
    if (d.front() == 0 || d.back() == 0) {
        throw ArgumentError("dimensions must be positive");
    }
    if (K < 2) {
        throw ArgumentError("class count K must be at least 2");
    }
    if (!(Q > 0.0) || K * Q < 1.0) {
        throw ArgumentError("radius must satisfy Q > 0 and KQ >= 1");
    }
}

nlohmann::json CompositionSpec::to_json() const {
    return {{"r", r}, {"d", d}, {"t", t}, {"beta", beta}, {"Q", Q}, {"K", K}};
}

CompositionSpec CompositionSpec::from_json(const nlohmann::json& j) {
    CompositionSpec s;
    try {
        s.beta = j.at("beta").get<std::vector<double>>();
        s.r = j.value("r", s.beta.empty() ? 0 : s.beta.size() - 1);
        s.t = j.at("t").get<std::vector<std::size_t>>();
        if (j.contains("d")) {
            s.d = j.at("d").get<std::vector<std::size_t>>();
        } else {
            s.d.assign(s.t.begin(), s.t.end());
            s.d.push_back(1);
        }
        s.Q = j.value("Q", 1.0);
        s.K = j.value("K", std::size_t{2});
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("bad composition spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::vector<double> effective_smoothness(std::span<const double> beta) {
    std::vector<double> out(beta.size());
    double tail = 1.0;
    for (std::size_t i = beta.size(); i-- > 0;) {
        out[i] = beta[i] * tail;
        tail *= std::min(beta[i], 1.0);
    }
    return out;
}

std::vector<double> effective_smoothness(const CompositionSpec& spec) {
    return effective_smoothness(spec.beta);
}

RateValue rate_phi_n(std::span<const double> beta, std::span<const std::size_t> t, double n) {
    if (beta.size() != t.size() || beta.empty()) {
        throw ArgumentError("rate needs matching nonempty smoothness and arity lists");
    }
    if (!(n >= 1.0)) {
        throw ArgumentError("sample size must be at least 1");
    }
    std::vector<double> bs = effective_smoothness(beta);
    std::vector<double> e(bs.size());
    double lowest = INFINITY;
    for (std::size_t i = 0; i < bs.size(); ++i) {
        e[i] = bs[i] / (bs[i] + static_cast<double>(t[i]));
        lowest = std::min(lowest, e[i]);
    }
    RateValue out;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] <= lowest * (1.0 + 1e-12)) {
            out.index = i;
            out.exponent = e[i];
            break;
        }
    }
    out.value = std::pow(n, -out.exponent);
    return out;
}

RateValue rate_phi_n(const CompositionSpec& spec, double n) {
    return rate_phi_n(spec.beta, spec.t, n);
}

double composition_error_bound(std::span<const double> Q, std::span<const double> beta, std::span<const double> eps) {
    if (Q.size() != beta.size() || eps.size() != beta.size() || beta.empty()) {
        throw ArgumentError("composition error bound needs equal nonempty lists");
    }
    std::size_t r = beta.size() - 1;
    double factor = Q[r];
    for (std::size_t l = 0; l < r; ++l) {
        factor *= std::pow(2.0 * Q[l], beta[l + 1]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i <= r; ++i) {
        if (eps[i] < 0.0) {
            throw ArgumentError("stage errors must be nonnegative");
        }
        double power = 1.0;
        for (std::size_t l = i + 1; l <= r; ++l) {
            power *= std::min(beta[l], 1.0);
        }
        sum += std::pow(eps[i], power);
    }
    return factor * sum;
}

TrueModel::TrueModel(CompositionSpec spec, std::string label, ConditionalProbability eval)
    : spec_(std::make_shared<const CompositionSpec>(std::move(spec))),
      label_(std::move(label)),
      eval_(std::make_shared<const ConditionalProbability>(std::move(eval))) {
    spec_->validate();
}

TrueModel make_gam(const std::vector<std::vector<HoelderBlock>>& scores, double Q, std::string label) {
    std::size_t K = scores.size();
    if (K < 2) {
        throw ArgumentError("a GAM needs at least two classes");
    }
    std::size_t d = scores[0].size();
    if (d == 0) {
        throw ArgumentError("a GAM needs at least one input coordinate");
    }
    double beta = scores[0][0].beta;
    double max_radius = 0.0;
    for (const auto& row : scores) {
        if (row.size() != d) {
            throw ArgumentError("every class needs one score per input coordinate");
        }
        for (const auto& f : row) {
            if (std::fabs(f.beta - beta) > 1e-12 * beta) {
                throw ArgumentError("GAM scores must share one smoothness value");
            }
            max_radius = std::max(max_radius, f.radius);
        }
    }
    if (Q <= 0.0) {
        Q = max_radius;
    }
    constexpr std::size_t probes = 1001;
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t p = 0; p < probes; ++p) {
                double x = static_cast<double>(p) / (probes - 1);
                double v = scores[k][i](x);
                if (!std::isfinite(v) || std::fabs(v) > Q) {
                    std::ostringstream os;
                    os << "score f_" << k + 1 << i + 1 << " leaves [-Q, Q] at x = " << x << " (value " << v
                       << ", Q = " << Q << ")";
                    throw ArgumentError(os.str());
                }
            }
        }
    }
    CompositionSpec spec;
    spec.r = 2;
    spec.d = {d, d, 1, 1};
    spec.t = {1, d, 1};
    spec.beta = {beta, std::max(beta, 1.0) * static_cast<double>(d), 1.0};
    spec.Q = (Q + 1.0) * static_cast<double>(d);
    spec.K = K;
    auto eval = [scores](std::span<const double> x) {
        std::size_t K = scores.size();
        std::vector<double> logits(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < scores[k].size(); ++i) {
                logits[k] += scores[k][i](x[i]);
            }
        }
        return softmax(logits);
    };
    return TrueModel(std::move(spec), std::move(label), std::move(eval));
}

TrueModel make_composition(std::vector<CompositionStage> stages, std::size_t K, CompositionHead head,
                           std::string label) {
    if (stages.empty()) {
        throw ArgumentError("a composition needs at least one stage");
    }
    CompositionSpec spec;
    spec.r = stages.size() - 1;
    spec.K = K;
    spec.Q = 0.0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        if (!s.eval) {
            throw ArgumentError("stage " + std::to_string(i) + " has no evaluator");
        }
        if (i > 0 && s.in_dim != stages[i - 1].out_dim) {
            throw ArgumentError("stage " + std::to_string(i) + " input dimension does not match stage " +
                                std::to_string(i - 1) + " output");
        }
        if (!(s.Q > 0.0)) {
            throw ArgumentError("stage radius must be positive");
        }
        spec.d.push_back(s.in_dim);
        spec.t.push_back(s.active);
        spec.beta.push_back(s.beta);
        spec.Q = std::max(spec.Q, s.Q);
    }
    if (stages.back().out_dim != K) {
        throw ArgumentError("last stage must produce K values");
    }
    spec.d.push_back(stages.back().out_dim);
    spec.validate();
    auto eval = [stages = std::move(stages), head](std::span<const double> x) {
        std::vector<double> h(x.begin(), x.end());
        std::vector<double> y;
        for (std::size_t i = 0; i < stages.size(); ++i) {
            const auto& s = stages[i];
            std::vector<double> z = h;
            if (i > 0) {
                double q = stages[i - 1].Q;
                for (double& v : z) {
                    v = 2.0 * q * v - q;
                }
            }
            y.assign(s.out_dim, 0.0);
            s.eval(z, y);
            for (double v : y) {
                if (!std::isfinite(v) || std::fabs(v) > s.Q * (1.0 + 1e-12)) {
                    throw DataError("stage " + std::to_string(i) + " leaves [-Q_i, Q_i]");
                }
            }
            h.resize(y.size());
            for (std::size_t j = 0; j < y.size(); ++j) {
                h[j] = y[j] / (2.0 * s.Q) + 0.5;
            }
        }
        if (head == CompositionHead::softmax) {
            return softmax(y);
        }
        if (!on_simplex(y)) {
            throw DataError("composition output is off the simplex");
        }
        return y;
    };
    return TrueModel(std::move(spec), std::move(label), std::move(eval));
}

namespace {

HoelderBlock block_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("name")) {
        throw ArgumentError("score block needs a 'name' field");
    }
    return library_hoelder(j.at("name").get<std::string>(), j);
}

} // namespace

TrueModel make_model(const std::string& name, const nlohmann::json& params) {
    if (name == "stock_gam") {
        return make_gam({{cusp_block(0.5, 1.0, 4.0, -1.0)}, {sinusoid_block(0.75, 2.0 * std::numbers::pi, 0.0, 1.0)}},
                        0.0, "stock_gam");
    }
    if (name == "gam") {
        std::vector<std::vector<HoelderBlock>> scores;
        try {
            for (const auto& row : params.at("scores")) {
                std::vector<HoelderBlock> blocks;
                for (const auto& b : row) {
                    blocks.push_back(block_from_json(b));
                }
                scores.push_back(std::move(blocks));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ArgumentError(std::string("bad gam parameters: ") + e.what());
        }
        return make_gam(scores, params.value("Q", 0.0), params.value("label", std::string("gam")));
    }
    if (name == "uniform") {
        std::size_t K = params.value("K", std::size_t{2});
        std::size_t d = params.value("d", std::size_t{1});
        if (K < 2 || d == 0) {
            throw ArgumentError("uniform model needs K >= 2 and d >= 1");
        }
        std::vector<std::vector<HoelderBlock>> scores(K, std::vector<HoelderBlock>(d, zero_block(1.0)));
        return make_gam(scores, 0.0, "uniform");
    }
    if (name == "logistic") {
        double a = params.value("slope", 1.0);
        return make_gam({{polynomial_block({0.0, a}, 1.0)}, {zero_block(1.0)}}, 0.0, "logistic");
    }
    throw ArgumentError("unknown model '" + name + "'");
}

TrueModel make_model(const nlohmann::json& ref) {
    if (ref.is_string()) {
        return make_model(ref.get<std::string>());
    }
    if (!ref.is_object() || !ref.contains("name")) {
        throw ArgumentError("model reference needs a 'name' field");
    }
    return make_model(ref.at("name").get<std::string>(), ref.value("params", nlohmann::json::object()));
}

} // namespace npmle
