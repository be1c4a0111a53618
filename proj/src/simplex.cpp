#include <npmle/simplex.hpp>

#include <npmle/errors.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace npmle {

bool on_simplex(std::span<const double> values, double tolerance) {
    if (values.empty()) {
        return false;
    }
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < -tolerance) {
            return false;
        }
        sum += v;
    }
    return std::fabs(sum - 1.0) <= tolerance;
}

SimplexVector::SimplexVector(std::initializer_list<double> values)
    : SimplexVector(std::vector<double>(values)) {
}

SimplexVector::SimplexVector(std::vector<double> values, double tolerance) : values_(std::move(values)) {
    if (!on_simplex(values_, tolerance)) {
        std::ostringstream os;
        os.precision(17);
        os << "vector is not on the simplex: (";
        for (std::size_t k = 0; k < values_.size(); ++k) {
            os << (k ? ", " : "") << values_[k];
        }
        os << ")";
        throw DataError(os.str());
    }
    for (double& v : values_) {
        v = std::max(v, 0.0);
    }
}

SimplexVector SimplexVector::uniform(std::size_t k) {
    if (k == 0) {
        throw ArgumentError("simplex dimension must be positive");
    }
    return SimplexVector(Unchecked{}, std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

SimplexVector SimplexVector::basis(std::size_t k, std::size_t index) {
    if (index >= k) {
        throw ArgumentError("basis index out of range");
    }
    std::vector<double> v(k, 0.0);
    v[index] = 1.0;
    return SimplexVector(Unchecked{}, std::move(v));
}

SimplexVector SimplexVector::midpoint(const SimplexVector& p, const SimplexVector& q) {
    if (p.size() != q.size()) {
        throw ArgumentError("dimension mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
    }
    std::vector<double> m(p.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = 0.5 * (p[k] + q[k]);
    }
    return SimplexVector(Unchecked{}, std::move(m));
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - top);
        total += out[k];
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

} // namespace npmle
