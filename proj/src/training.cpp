#include <npmle/training.hpp>

#include <npmle/errors.hpp>
#include <npmle/rng.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace npmle {

void TrainConfig::validate() const {
    if (epochs == 0 || (steps && *steps == 0)) {
        throw ArgumentError("training needs at least one step");
    }
    if (restarts == 0) {
        throw ArgumentError("training needs at least one restart");
    }
    if (!(lr > 0.0)) {
        throw ArgumentError("learning rate must be positive");
    }
    if (B && !(*B > 0.0)) {
        throw ArgumentError("projection bound must be positive");
    }
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json j = {{"epochs", epochs},
                        {"min_steps", min_steps},
                        {"batch", batch},
                        {"lr", lr},
                        {"schedule", schedule == Schedule::cosine ? "cosine" : "constant"},
                        {"restarts", restarts},
                        {"seed", seed},
                        {"patience", patience},
                        {"beta1", beta1},
                        {"beta2", beta2},
                        {"eps", eps},
                        {"init", init == Init::he ? "he" : "glorot"},
                        {"init_shift", init_shift}};
    j["steps"] = steps ? nlohmann::json(*steps) : nlohmann::json(nullptr);
    j["B"] = B ? nlohmann::json(*B) : nlohmann::json(nullptr);
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        c.epochs = j.value("epochs", c.epochs);
        if (j.contains("steps") && !j.at("steps").is_null()) {
            c.steps = j.at("steps").get<std::size_t>();
        }
        c.min_steps = j.value("min_steps", c.min_steps);
        c.batch = j.value("batch", c.batch);
        c.lr = j.value("lr", c.lr);
        std::string sched = j.value("schedule", std::string("cosine"));
        if (sched == "cosine") {
            c.schedule = Schedule::cosine;
        } else if (sched == "constant") {
            c.schedule = Schedule::constant;
        } else {
            throw ArgumentError("unknown schedule '" + sched + "'");
        }
        c.restarts = j.value("restarts", c.restarts);
        if (j.contains("B") && !j.at("B").is_null()) {
            c.B = j.at("B").get<double>();
        }
        c.seed = j.value("seed", c.seed);
        c.patience = j.value("patience", c.patience);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.eps = j.value("eps", c.eps);
        std::string init = j.value("init", std::string("glorot"));
        if (init == "he") {
            c.init = Init::he;
        } else if (init == "glorot") {
            c.init = Init::glorot;
        } else {
            throw ArgumentError("unknown init '" + init + "'");
        }
        c.init_shift = j.value("init_shift", c.init_shift);
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("bad train config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json TrainResult::to_json() const {
    return {{"final_loss", final_loss}, {"loss_history", loss_history}, {"restart_losses", restart_losses},
            {"restart_index", restart_index}, {"steps", steps}, {"wall_time", wall_time}};
}

namespace {

struct RestartOutcome {
    NetParams best;
    double best_loss = INFINITY;
    std::vector<double> history;
    std::size_t steps = 0;
};

RestartOutcome run_restart(const ArchSpec& arch, const Dataset& ds, const TrainConfig& cfg, double B,
                           std::size_t restart) {
    std::size_t n = ds.size();
    std::size_t batch = cfg.batch == 0 ? std::min<std::size_t>(n, 256) : std::min(cfg.batch, n);
    std::size_t per_epoch = (n + batch - 1) / batch;
    std::size_t total = cfg.steps ? *cfg.steps : std::max(cfg.epochs * per_epoch, cfg.min_steps);

    RandomStream init(cfg.seed, "train.init", restart);
    RandomStream shuffle(cfg.seed, "train.shuffle", restart);
    NetParams params = project_sup(
        cfg.init == Init::he ? he_init(arch, init, cfg.init_shift) : glorot_init(arch, init, cfg.init_shift), B);
    NetParams m = NetParams::zeros(arch), v = NetParams::zeros(arch), grad;
    auto X = columns(ds);

    RestartOutcome out;
    out.best = params;
    out.best_loss = cross_entropy(params, X, ds.labels);
    std::size_t stale = 0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Eigen::MatrixXd xb;
    std::vector<std::size_t> yb;
    double b1t = 1.0, b2t = 1.0;
    std::size_t step = 0;
    while (step < total) {
        // Fisher-Yates with the restart's shuffle stream.
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.uniform_index(static_cast<std::uint32_t>(i))]);
        }
        for (std::size_t start = 0; start < n && step < total; start += batch, ++step) {
            std::size_t len = std::min(batch, n - start);
            xb.resize(X.rows(), static_cast<Eigen::Index>(len));
            yb.resize(len);
            for (std::size_t i = 0; i < len; ++i) {
                xb.col(static_cast<Eigen::Index>(i)) = X.col(static_cast<Eigen::Index>(order[start + i]));
                yb[i] = ds.labels[order[start + i]];
            }
            double loss = loss_and_gradient(params, xb, yb, grad);
            if (!std::isfinite(loss)) {
                throw TrainingError("non-finite loss", step);
            }
            double lr = cfg.lr;
            if (cfg.schedule == Schedule::cosine) {
                lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
            }
            b1t *= cfg.beta1;
            b2t *= cfg.beta2;
            double c1 = 1.0 / (1.0 - b1t), c2 = 1.0 / (1.0 - b2t);
            auto update = [&](auto& p, auto& mm, auto& vv, const auto& g) {
                mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * g;
                vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * g.cwiseProduct(g);
                p.array() -= lr * (c1 * mm.array()) / ((c2 * vv.array()).sqrt() + cfg.eps);
                p = p.cwiseMax(-B).cwiseMin(B);
            };
            for (std::size_t i = 0; i < params.W.size(); ++i) {
                update(params.W[i], m.W[i], v.W[i], grad.W[i]);
            }
            for (std::size_t i = 0; i < params.v.size(); ++i) {
                update(params.v[i], m.v[i], v.v[i], grad.v[i]);
            }
        }
        double full = cross_entropy(params, X, ds.labels);
        if (!std::isfinite(full)) {
            throw TrainingError("non-finite loss", step);
        }
        out.history.push_back(full);
        if (full < out.best_loss) {
            out.best_loss = full;
            out.best = params;
            stale = 0;
        } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
            break;
        }
    }
    out.steps = step;
    return out;
}

} // namespace

TrainResult fit_npmle(const ArchSpec& arch, const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    arch.validate();
    if (arch.head != Head::softmax || arch.output_dim() != ds.K || arch.input_dim() != ds.dim()) {
        throw ArgumentError("architecture must be a softmax network from R^d to K classes");
    }
    if (ds.size() == 0) {
        throw ArgumentError("cannot fit an empty dataset");
    }
    double B = cfg.B.value_or(arch.B);
    if (B > arch.B) {
        throw ArgumentError("projection bound exceeds the architecture bound");
    }
    auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    result.final_loss = INFINITY;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        RestartOutcome o = run_restart(arch, ds, cfg, B, r);
        result.restart_losses.push_back(o.best_loss);
        result.steps += o.steps;
        if (o.best_loss < result.final_loss) {
            result.final_loss = o.best_loss;
            result.params = std::move(o.best);
            result.loss_history = std::move(o.history);
            result.restart_index = r;
        }
    }
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

double empirical_nll(const ConditionalProbability& p, const Dataset& ds) {
    double s = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<double> q = p(ds.x(i));
        if (q.size() != ds.K) {
            throw ArgumentError("candidate returned the wrong number of classes");
        }
        double v = q[ds.labels[i]];
        if (!(v > 0.0)) {
            return INFINITY;
        }
        s -= std::log(v);
    }
    return s / static_cast<double>(ds.size());
}

FiniteFit fit_exact_finite(const std::vector<ConditionalProbability>& candidates, const Dataset& ds) {
    if (candidates.empty()) {
        throw ArgumentError("candidate list is empty");
    }
    FiniteFit fit;
    double best = INFINITY;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        double loss = empirical_nll(candidates[j], ds);
        fit.losses.push_back(loss);
        if (loss < best) {
            best = loss;
            fit.index = j;
        }
    }
    if (std::isinf(best)) {
        throw DegenerateModelError("every candidate assigns zero probability to an observed label");
    }
    return fit;
}

ArchSpec architecture_from_theory(const CompositionSpec& spec, double n, const TheoryConstants& c) {
    spec.validate();
    if (!(n >= 2.0)) {
        throw ArgumentError("architecture prescription needs n >= 2");
    }
    double phi = rate_phi_n(spec, n).value;
    double nphi = n * phi;
    ArchSpec arch;
    arch.L = static_cast<std::size_t>(std::ceil(c.c_L * std::log(n)));
    std::size_t width = static_cast<std::size_t>(std::ceil(c.c_m * std::sqrt(nphi)));
    arch.widths.assign(arch.L + 2, width);
    arch.widths.front() = spec.d.front();
    arch.widths.back() = spec.K;
    double B = 0.0;
    for (std::size_t i = 0; i <= spec.r; ++i) {
        B = std::max(B, std::pow(nphi, (2.0 * spec.beta[i] + 2.0) / static_cast<double>(spec.t[i])));
    }
    arch.B = c.c_B * B;
    arch.head = Head::softmax;
    return arch;
}

} // namespace npmle
