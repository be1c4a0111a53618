#pragma once

#include <npmle/datagen.hpp>
#include <npmle/models.hpp>
#include <npmle/network.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace npmle {

enum class Schedule { constant, cosine };
enum class Init { glorot, he };

struct TrainConfig {
    // Passes over the data; the step count is epochs * ceil(n / batch) unless `steps` is set.
    std::size_t epochs = 200;
    std::optional<std::size_t> steps;
    // Lower bound on the epoch-derived step count so small samples are not under-optimized.
    std::size_t min_steps = 0;
    // Minibatch size; 0 means min(n, 256).
    std::size_t batch = 0;
    double lr = 1e-3;
    Schedule schedule = Schedule::cosine;
    std::size_t restarts = 3;
    // Projection bound; unset uses the architecture's B. Must not exceed it.
    std::optional<double> B;
    std::uint64_t seed = 0;
    // Stop a restart after this many epochs without a full-data loss improvement; 0 disables.
    std::size_t patience = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Init init = Init::glorot;
    // Initial value of every hidden shift v; negative values start units active.
    double init_shift = -0.1;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainResult {
    NetParams params;
    // Best full-data loss of the winning restart; equals the minimum of restart_losses.
    double final_loss = 0.0;
    // Full-data loss after every epoch of the winning restart.
    std::vector<double> loss_history;
    std::vector<double> restart_losses;
    std::size_t restart_index = 0;
    std::size_t steps = 0;
    double wall_time = 0.0;

    nlohmann::json to_json() const;
};

// Projected Adam on the empirical negative log-likelihood. Restart r draws its
// initialization from stream (seed, "train.init", r) and its minibatch order
// from (seed, "train.shuffle", r). Each restart keeps its best epoch-end
// parameters; the restart with the smallest such loss wins, ties to the lowest index.
TrainResult fit_npmle(const ArchSpec& arch, const Dataset& ds, const TrainConfig& cfg);

struct FiniteFit {
    std::size_t index = 0;
    std::vector<double> losses;
};

// Exact ERM over a finite candidate list. A zero probability on an observed
// label gives loss +infinity. Raises DegenerateModelError if every loss is infinite.
FiniteFit fit_exact_finite(const std::vector<ConditionalProbability>& candidates, const Dataset& ds);
double empirical_nll(const ConditionalProbability& p, const Dataset& ds);

struct TheoryConstants {
    double c_L = 1.0;
    double c_m = 1.0;
    double c_B = 1.0;
};

// L = ceil(c_L ln n), every hidden width ceil(c_m sqrt(n phi_n)),
// B = c_B max_i (n phi_n)^{(2 beta_i + 2) / t_i}, softmax head with K outputs.
ArchSpec architecture_from_theory(const CompositionSpec& spec, double n, const TheoryConstants& c = {});

} // namespace npmle
