#pragma once

#include <npmle/input_law.hpp>
#include <npmle/models.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace npmle {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// n labelled inputs. Labels are stored as 0-based class indices; the one-hot
// row Y_i is e_{label_i}.
struct Dataset {
    RowMatrix X; // n x d, entries in [0,1]
    std::vector<std::size_t> labels;
    std::size_t K = 2;
    std::uint64_t seed = 0;
    std::string model_label;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
    std::span<const double> x(std::size_t i) const { return {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())}; }
    RowMatrix one_hot() const;
    // Throws DataError when an input leaves [0,1] or a label is out of range.
    void validate() const;

    bool operator==(const Dataset& other) const;
};

// X_i ~ law from stream (seed, "datagen.x"), Y_i ~ Categorical(eta(X_i)) from
// stream (seed, "datagen.y"). Raises DataError if eta(X_i) is off the simplex.
Dataset sample_dataset(const TrueModel& model, std::size_t n, const InputLaw& law, std::uint64_t seed);
Dataset sample_dataset(const ConditionalProbability& eta, std::size_t K, std::string label, std::size_t n,
                       const InputLaw& law, std::uint64_t seed);

// CSV with header x1,...,xd,label (1-based labels, 17 significant digits) and a
// JSON sidecar <path>.json carrying K, seed and model_label.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
// Without a sidecar, K is taken as the largest label seen. Malformed input raises
// ParseError with the offending line number.
Dataset load_dataset(const std::filesystem::path& path);

} // namespace npmle
