#include <npmle/input_law.hpp>

#include <npmle/errors.hpp>

#include <algorithm>
#include <cmath>

namespace npmle {

InputLaw InputLaw::uniform(std::size_t dim) {
    if (dim == 0) {
        throw ArgumentError("input dimension must be positive");
    }
    return InputLaw(Family::uniform, dim, 0.0);
}

InputLaw InputLaw::mixture(std::size_t dim, double weight) {
    if (dim == 0) {
        throw ArgumentError("input dimension must be positive");
    }
    if (!(weight >= 0.0 && weight < 1.0)) {
        throw ArgumentError("mixture weight must lie in [0, 1)");
    }
    return InputLaw(Family::mixture, dim, weight);
}

double InputLaw::density(std::span<const double> x) const {
    return marginal_density(x, dim_);
}

double InputLaw::marginal_density(std::span<const double> x, std::size_t coords) const {
    for (std::size_t j = 0; j < coords; ++j) {
        if (x[j] < 0.0 || x[j] > 1.0) {
            return 0.0;
        }
    }
    if (family_ == Family::uniform) {
        return 1.0;
    }
    double beta = 1.0;
    for (std::size_t j = 0; j < coords; ++j) {
        beta *= 6.0 * x[j] * (1.0 - x[j]);
    }
    return (1.0 - weight_) + weight_ * beta;
}

double InputLaw::gamma() const {
    return family_ == Family::uniform ? 1.0 : 1.0 - weight_;
}

double InputLaw::Gamma() const {
    if (family_ == Family::uniform) {
        return 1.0;
    }
    return (1.0 - weight_) + weight_ * std::pow(1.5, static_cast<double>(dim_));
}

void InputLaw::sample(RandomStream& stream, std::span<double> out) const {
    if (out.size() != dim_) {
        throw ArgumentError("sample buffer has wrong dimension");
    }
    bool from_beta = family_ == Family::mixture && stream.uniform() < weight_;
    for (double& v : out) {
        if (from_beta) {
            // The median of three independent uniforms is Beta(2, 2).
            double a = stream.uniform(), b = stream.uniform(), c = stream.uniform();
            v = std::max(std::min(a, b), std::min(std::max(a, b), c));
        } else {
            v = stream.uniform();
        }
    }
}

std::vector<double> InputLaw::sample(RandomStream& stream) const {
    std::vector<double> x(dim_);
    sample(stream, x);
    return x;
}

std::string InputLaw::name() const {
    return family_ == Family::uniform ? "uniform" : "mixture";
}

} // namespace npmle
