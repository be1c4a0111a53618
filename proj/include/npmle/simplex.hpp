#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace npmle {

// Tolerance on the entry sum and on negative entries for inputs entering the library.
inline constexpr double SIMPLEX_TOLERANCE = 1e-9;

// A probability vector over K classes.
//
// Construction validates: every entry >= -SIMPLEX_TOLERANCE and |sum - 1| <= SIMPLEX_TOLERANCE.
// Entries within tolerance of the constraints are kept as given (no silent renormalization);
// tiny negative entries are clamped to zero.
class SimplexVector {
public:
    SimplexVector(std::initializer_list<double> values);
    explicit SimplexVector(std::vector<double> values, double tolerance = SIMPLEX_TOLERANCE);

    static SimplexVector uniform(std::size_t k);
    static SimplexVector basis(std::size_t k, std::size_t index);
    // Entrywise (p + q) / 2.
    static SimplexVector midpoint(const SimplexVector& p, const SimplexVector& q);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }
    std::span<const double> values() const { return values_; }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

private:
    struct Unchecked {};
    SimplexVector(Unchecked, std::vector<double> values) : values_(std::move(values)) {}

    std::vector<double> values_;
};

// True if `values` lies on the simplex within `tolerance`.
bool on_simplex(std::span<const double> values, double tolerance = SIMPLEX_TOLERANCE);

// Maps a point of [0,1]^d to a probability vector; used for truths, estimators and candidates.
using ConditionalProbability = std::function<std::vector<double>(std::span<const double>)>;

// A real function of (x, class index); the label y = e_k is passed as its index k.
using LabelFunction = std::function<double(std::span<const double>, std::size_t)>;

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

} // namespace npmle
