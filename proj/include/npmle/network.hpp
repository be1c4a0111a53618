#pragma once

#include <npmle/datagen.hpp>
#include <npmle/rng.hpp>
#include <npmle/simplex.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace npmle {

enum class Head { identity, softmax };

std::string to_string(Head head);
Head head_from_string(const std::string& name);

// Dense architecture: L hidden layers, widths m_0 .. m_{L+1}, weight bound B,
// optional sparsity budget s (metadata only).
struct ArchSpec {
    std::size_t L = 1;
    std::vector<std::size_t> widths;
    double B = 1.0;
    std::optional<std::size_t> s;
    Head head = Head::softmax;

    std::size_t input_dim() const { return widths.front(); }
    std::size_t output_dim() const { return widths.back(); }
    std::size_t max_width() const;
    // Number of weights plus hidden biases.
    std::size_t parameter_count() const;
    void validate() const;

    nlohmann::json to_json() const;
    static ArchSpec from_json(const nlohmann::json& j);

    bool operator==(const ArchSpec&) const = default;
};

// W[i] has shape m_{i+1} x m_i for i = 0..L; v[i] holds the shift of hidden layer
// i+1 (size m_{i+1}). The network computes
//   f(x) = W_L s_{v_L}( ... W_1 s_{v_1}(W_0 x)),  s_v(y) = max(y - v, 0),
// with no shift before the first layer and no output bias.
struct NetParams {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> v;

    static NetParams zeros(const ArchSpec& arch);
    double max_abs() const;
    std::size_t size() const;
    // Shapes must match; used by the optimizer.
    void add_scaled(const NetParams& other, double scale);

    bool operator==(const NetParams& other) const;
};

// Throws ArgumentError when shapes disagree with the architecture.
void check_shapes(const NetParams& params, const ArchSpec& arch);

// Logits for a batch: X is m_0 x n with one input per column; returns m_{L+1} x n.
Eigen::MatrixXd forward_logits(const NetParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X);
std::vector<double> forward_logits(const NetParams& params, std::span<const double> x);
// Applies the head; for softmax the result is a probability vector.
std::vector<double> forward(const NetParams& params, const ArchSpec& arch, std::span<const double> x);

// Inputs of a dataset as an m_0 x n column matrix (a view of the row-major storage).
inline Eigen::Map<const Eigen::MatrixXd> columns(const Dataset& ds) {
    return {ds.X.data(), static_cast<Eigen::Index>(ds.dim()), static_cast<Eigen::Index>(ds.size())};
}

// -(1/n) sum_i log softmax(f(X_i))_{y_i}.
double cross_entropy(const NetParams& params, const ArchSpec& arch, const Dataset& ds);
double cross_entropy(const NetParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                     std::span<const std::size_t> labels);

// Exact reverse-mode gradient of the cross entropy; returns the loss alongside.
double loss_and_gradient(const NetParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                         std::span<const std::size_t> labels, NetParams& grad);
NetParams gradient(const NetParams& params, const ArchSpec& arch, const Dataset& ds);

// Entrywise clamp to [-B, B].
NetParams project_sup(NetParams params, double B);
void project_sup_inplace(NetParams& params, double B);

std::size_t count_nonzero(const NetParams& params);

// Uniform on [-sqrt(6/(m_in+m_out)), sqrt(6/(m_in+m_out))] per weight matrix; every shift set to `shift`.
NetParams glorot_init(const ArchSpec& arch, RandomStream& stream, double shift = 0.0);
// Uniform on [-sqrt(6/m_in), sqrt(6/m_in)]; every shift set to `shift`.
NetParams he_init(const ArchSpec& arch, RandomStream& stream, double shift = 0.0);

// An architecture together with its parameters.
struct Network {
    ArchSpec arch;
    NetParams params;

    std::vector<double> operator()(std::span<const double> x) const { return forward(params, arch, x); }
    // Copies the network into a callable.
    ConditionalProbability function() const;

    nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);
};

// Architecture whose B is the largest entry of params and whose widths follow the shapes.
ArchSpec arch_of(const NetParams& params, Head head);

} // namespace npmle
