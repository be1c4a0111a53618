#pragma once

#include <npmle/rng.hpp>

#include <span>
#include <string>
#include <vector>

namespace npmle {

// Marginal law P_X of the inputs on [0,1]^d.
//
// uniform:  density 1.
// mixture:  (1 - w) * Uniform + w * (tensor Beta(2,2)); density (1 - w) + w * prod_j 6 x_j (1 - x_j),
//           so gamma = 1 - w and Gamma = (1 - w) + w * 1.5^d.
class InputLaw {
public:
    enum class Family { uniform, mixture };

    static InputLaw uniform(std::size_t dim);
    static InputLaw mixture(std::size_t dim, double weight = 0.5);

    Family family() const { return family_; }
    std::size_t dim() const { return dim_; }
    double mixture_weight() const { return weight_; }

    double density(std::span<const double> x) const;
    // Density of the first `coords` coordinates with the rest integrated out.
    double marginal_density(std::span<const double> x, std::size_t coords) const;
    // Lower and upper density bounds.
    double gamma() const;
    double Gamma() const;

    void sample(RandomStream& stream, std::span<double> out) const;
    std::vector<double> sample(RandomStream& stream) const;

    std::string name() const;

private:
    InputLaw(Family family, std::size_t dim, double weight) : family_(family), dim_(dim), weight_(weight) {}

    Family family_;
    std::size_t dim_;
    double weight_;
};

} // namespace npmle
