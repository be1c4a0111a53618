#include <npmle/network.hpp>

#include <npmle/errors.hpp>

#include <algorithm>
#include <cmath>

namespace npmle {

namespace {

constexpr int NETWORK_SCHEMA_VERSION = 1;

// Column-wise log-softmax.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& Z) {
    Eigen::RowVectorXd top = Z.colwise().maxCoeff();
    Eigen::MatrixXd shifted = Z.rowwise() - top;
    Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log();
    return shifted.rowwise() - lse;
}

} // namespace

std::string to_string(Head head) {
    return head == Head::softmax ? "softmax" : "identity";
}

Head head_from_string(const std::string& name) {
    if (name == "softmax") {
        return Head::softmax;
    }
    if (name == "identity") {
        return Head::identity;
    }
    throw ArgumentError("unknown head '" + name + "'");
}

std::size_t ArchSpec::max_width() const {
    return *std::max_element(widths.begin(), widths.end());
}

std::size_t ArchSpec::parameter_count() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        count += widths[i] * widths[i + 1];
        if (i + 1 < widths.size() - 1) {
            count += widths[i + 1];
        }
    }
    return count;
}

void ArchSpec::validate() const {
    if (widths.size() != L + 2) {
        throw ArgumentError("architecture needs L + 2 widths");
    }
    for (std::size_t w : widths) {
        if (w == 0) {
            throw ArgumentError("widths must be positive");
        }
    }
    if (!(B > 0.0)) {
        throw ArgumentError("weight bound B must be positive");
    }
    if (head == Head::softmax && output_dim() < 2) {
        throw ArgumentError("softmax head needs at least two outputs");
    }
    if (s && *s > parameter_count()) {
        throw ArgumentError("sparsity budget exceeds the parameter count");
    }
}

nlohmann::json ArchSpec::to_json() const {
    nlohmann::json j = {{"L", L}, {"widths", widths}, {"B", B}, {"head", to_string(head)}};
    if (s) {
        j["s"] = *s;
    }
    return j;
}

ArchSpec ArchSpec::from_json(const nlohmann::json& j) {
    ArchSpec a;
    try {
        a.widths = j.at("widths").get<std::vector<std::size_t>>();
        a.L = j.value("L", a.widths.size() >= 2 ? a.widths.size() - 2 : 0);
        a.B = j.value("B", 1.0);
        a.head = head_from_string(j.value("head", std::string("softmax")));
        if (j.contains("s") && !j.at("s").is_null()) {
            a.s = j.at("s").get<std::size_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("bad architecture: ") + e.what());
    }
    a.validate();
    return a;
}

NetParams NetParams::zeros(const ArchSpec& arch) {
    arch.validate();
    NetParams p;
    for (std::size_t i = 0; i <= arch.L; ++i) {
        p.W.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(arch.widths[i + 1]),
                                            static_cast<Eigen::Index>(arch.widths[i])));
        if (i < arch.L) {
            p.v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.widths[i + 1])));
        }
    }
    return p;
}

double NetParams::max_abs() const {
    double m = 0.0;
    for (const auto& w : W) {
        if (w.size()) {
            m = std::max(m, w.cwiseAbs().maxCoeff());
        }
    }
    for (const auto& b : v) {
        if (b.size()) {
            m = std::max(m, b.cwiseAbs().maxCoeff());
        }
    }
    return m;
}

std::size_t NetParams::size() const {
    std::size_t n = 0;
    for (const auto& w : W) {
        n += static_cast<std::size_t>(w.size());
    }
    for (const auto& b : v) {
        n += static_cast<std::size_t>(b.size());
    }
    return n;
}

void NetParams::add_scaled(const NetParams& other, double scale) {
    for (std::size_t i = 0; i < W.size(); ++i) {
        W[i] += scale * other.W[i];
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] += scale * other.v[i];
    }
}

bool NetParams::operator==(const NetParams& other) const {
    if (W.size() != other.W.size() || v.size() != other.v.size()) {
        return false;
    }
    for (std::size_t i = 0; i < W.size(); ++i) {
        if (W[i].rows() != other.W[i].rows() || W[i].cols() != other.W[i].cols() || W[i] != other.W[i]) {
            return false;
        }
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].size() != other.v[i].size() || v[i] != other.v[i]) {
            return false;
        }
    }
    return true;
}

void check_shapes(const NetParams& params, const ArchSpec& arch) {
    if (params.W.size() != arch.L + 1 || params.v.size() != arch.L) {
        throw ArgumentError("parameter layer count does not match the architecture");
    }
    for (std::size_t i = 0; i <= arch.L; ++i) {
        if (static_cast<std::size_t>(params.W[i].rows()) != arch.widths[i + 1] ||
            static_cast<std::size_t>(params.W[i].cols()) != arch.widths[i]) {
            throw ArgumentError("weight matrix " + std::to_string(i) + " has the wrong shape");
        }
        if (i < arch.L && static_cast<std::size_t>(params.v[i].size()) != arch.widths[i + 1]) {
            throw ArgumentError("shift vector " + std::to_string(i + 1) + " has the wrong size");
        }
    }
}

Eigen::MatrixXd forward_logits(const NetParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.rows() != params.W.front().cols()) {
        throw ArgumentError("input dimension " + std::to_string(X.rows()) + " does not match network input " +
                            std::to_string(params.W.front().cols()));
    }
    Eigen::MatrixXd h = params.W[0] * X;
    for (std::size_t i = 1; i < params.W.size(); ++i) {
        Eigen::MatrixXd a = (h.colwise() - params.v[i - 1]).cwiseMax(0.0);
        h = params.W[i] * a;
    }
    return h;
}

std::vector<double> forward_logits(const NetParams& params, std::span<const double> x) {
    Eigen::Map<const Eigen::MatrixXd> X(x.data(), static_cast<Eigen::Index>(x.size()), 1);
    Eigen::MatrixXd out = forward_logits(params, X);
    return std::vector<double>(out.data(), out.data() + out.size());
}

std::vector<double> forward(const NetParams& params, const ArchSpec& arch, std::span<const double> x) {
    if (x.size() != arch.input_dim()) {
        throw ArgumentError("input dimension " + std::to_string(x.size()) + " does not match m_0 = " +
                            std::to_string(arch.input_dim()));
    }
    std::vector<double> z = forward_logits(params, x);
    return arch.head == Head::softmax ? softmax(z) : z;
}

double cross_entropy(const NetParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                     std::span<const std::size_t> labels) {
    Eigen::MatrixXd logp = log_softmax(forward_logits(params, X));
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        s -= logp(static_cast<Eigen::Index>(labels[i]), static_cast<Eigen::Index>(i));
    }
    return s / static_cast<double>(labels.size());
}

double cross_entropy(const NetParams& params, const ArchSpec& arch, const Dataset& ds) {
    if (arch.head != Head::softmax || arch.output_dim() != ds.K) {
        throw ArgumentError("cross entropy needs a softmax head with K outputs");
    }
    check_shapes(params, arch);
    return cross_entropy(params, columns(ds), ds.labels);
}

double loss_and_gradient(const NetParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                         std::span<const std::size_t> labels, NetParams& grad) {
    std::size_t L = params.v.size();
    double n = static_cast<double>(labels.size());
    // Forward pass keeping the post-activations a_0 = X, a_1 .. a_L.
    std::vector<Eigen::MatrixXd> act(L + 1);
    act[0] = X;
    Eigen::MatrixXd h = params.W[0] * X;
    for (std::size_t i = 1; i <= L; ++i) {
        act[i] = (h.colwise() - params.v[i - 1]).cwiseMax(0.0);
        h = params.W[i] * act[i];
    }
    Eigen::MatrixXd logp = log_softmax(h);
    double loss = 0.0;
    Eigen::MatrixXd delta = logp.array().exp();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto c = static_cast<Eigen::Index>(i);
        auto k = static_cast<Eigen::Index>(labels[i]);
        loss -= logp(k, c);
        delta(k, c) -= 1.0;
    }
    loss /= n;
    delta /= n;
    grad.W.resize(L + 1);
    grad.v.resize(L);
    for (std::size_t i = L + 1; i-- > 0;) {
        grad.W[i].noalias() = delta * act[i].transpose();
        if (i == 0) {
            break;
        }
        Eigen::MatrixXd back = params.W[i].transpose() * delta;
        // The derivative of relu(z - v) is the indicator of a positive output.
        delta = (act[i].array() > 0.0).select(back, 0.0);
        grad.v[i - 1] = -delta.rowwise().sum();
    }
    return loss;
}

NetParams gradient(const NetParams& params, const ArchSpec& arch, const Dataset& ds) {
    if (arch.head != Head::softmax || arch.output_dim() != ds.K) {
        throw ArgumentError("gradient needs a softmax head with K outputs");
    }
    check_shapes(params, arch);
    NetParams g;
    loss_and_gradient(params, columns(ds), ds.labels, g);
    return g;
}

void project_sup_inplace(NetParams& params, double B) {
    if (!(B > 0.0)) {
        throw ArgumentError("projection bound must be positive");
    }
    for (auto& w : params.W) {
        w = w.cwiseMax(-B).cwiseMin(B);
    }
    for (auto& b : params.v) {
        b = b.cwiseMax(-B).cwiseMin(B);
    }
}

NetParams project_sup(NetParams params, double B) {
    project_sup_inplace(params, B);
    return params;
}

std::size_t count_nonzero(const NetParams& params) {
    std::size_t n = 0;
    for (const auto& w : params.W) {
        n += static_cast<std::size_t>((w.array() != 0.0).count());
    }
    for (const auto& b : params.v) {
        n += static_cast<std::size_t>((b.array() != 0.0).count());
    }
    return n;
}

NetParams glorot_init(const ArchSpec& arch, RandomStream& stream, double shift) {
    NetParams p = NetParams::zeros(arch);
    for (auto& w : p.W) {
        double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        // Fill row-major so the draw order matches the serialized layout.
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = stream.uniform(-a, a);
            }
        }
    }
    for (auto& v : p.v) {
        v.setConstant(shift);
    }
    return p;
}

NetParams he_init(const ArchSpec& arch, RandomStream& stream, double shift) {
    NetParams p = NetParams::zeros(arch);
    for (auto& w : p.W) {
        double a = std::sqrt(6.0 / static_cast<double>(w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = stream.uniform(-a, a);
            }
        }
    }
    for (auto& v : p.v) {
        v.setConstant(shift);
    }
    return p;
}

ConditionalProbability Network::function() const {
    return [net = *this](std::span<const double> x) { return net(x); };
}

nlohmann::json Network::to_json() const {
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& w : params.W) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(w.cols()));
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                row[static_cast<std::size_t>(c)] = w(r, c);
            }
            rows.push_back(row);
        }
        weights.push_back(rows);
    }
    nlohmann::json shifts = nlohmann::json::array();
    for (const auto& b : params.v) {
        shifts.push_back(std::vector<double>(b.data(), b.data() + b.size()));
    }
    return {{"schema_version", NETWORK_SCHEMA_VERSION}, {"arch", arch.to_json()}, {"weights", weights},
            {"shifts", shifts}};
}

Network Network::from_json(const nlohmann::json& j) {
    Network net;
    net.arch = ArchSpec::from_json(j.at("arch"));
    net.params = NetParams::zeros(net.arch);
    try {
        const auto& weights = j.at("weights");
        const auto& shifts = j.at("shifts");
        if (weights.size() != net.params.W.size() || shifts.size() != net.params.v.size()) {
            throw ArgumentError("layer count does not match the architecture");
        }
        for (std::size_t i = 0; i < weights.size(); ++i) {
            auto& w = net.params.W[i];
            if (weights[i].size() != static_cast<std::size_t>(w.rows())) {
                throw ArgumentError("weight matrix " + std::to_string(i) + " has the wrong shape");
            }
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                auto row = weights[i][static_cast<std::size_t>(r)].get<std::vector<double>>();
                if (row.size() != static_cast<std::size_t>(w.cols())) {
                    throw ArgumentError("weight matrix " + std::to_string(i) + " has the wrong shape");
                }
                for (Eigen::Index c = 0; c < w.cols(); ++c) {
                    w(r, c) = row[static_cast<std::size_t>(c)];
                }
            }
        }
        for (std::size_t i = 0; i < shifts.size(); ++i) {
            auto b = shifts[i].get<std::vector<double>>();
            if (b.size() != static_cast<std::size_t>(net.params.v[i].size())) {
                throw ArgumentError("shift vector " + std::to_string(i + 1) + " has the wrong size");
            }
            net.params.v[i] = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("bad network file: ") + e.what());
    }
    return net;
}

ArchSpec arch_of(const NetParams& params, Head head) {
    ArchSpec a;
    a.L = params.v.size();
    a.widths.push_back(static_cast<std::size_t>(params.W.front().cols()));
    for (const auto& w : params.W) {
        a.widths.push_back(static_cast<std::size_t>(w.rows()));
    }
    a.B = std::max(params.max_abs(), 1e-300);
    a.head = head;
    return a;
}

} // namespace npmle
