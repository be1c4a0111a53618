#pragma once

#include <npmle/input_law.hpp>
#include <npmle/metrics.hpp>
#include <npmle/models.hpp>
#include <npmle/network.hpp>
#include <npmle/training.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace npmle {

inline constexpr int RESULT_SCHEMA_VERSION = 1;

enum class ArchSource { theory, explicit_arch };

struct ExperimentConfig {
    nlohmann::json model = {{"name", "stock_gam"}, {"params", nlohmann::json::object()}};
    std::string input_law = "uniform"; // "uniform" or "mixture"
    double mixture_weight = 0.5;
    std::vector<std::size_t> n_grid;
    std::vector<std::uint64_t> seeds;
    ArchSource arch_source = ArchSource::theory;
    TheoryConstants constants;
    std::optional<ArchSpec> arch; // required for explicit_arch; K and d are checked against the model
    TrainConfig train;
    RiskOptions risk;
    std::filesystem::path output_dir = "results";

    void validate() const;
    InputLaw law(std::size_t dim) const;
    // Everything that affects numbers; the output directory is left out.
    nlohmann::json canonical_json() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct CellResult {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double risk = 0.0;
    double risk_error = 0.0; // quadrature or Monte Carlo error of the risk estimate
    double final_loss = 0.0;
    std::size_t steps = 0;
    bool ok = true;
    std::string error;
    bool cached = false;

    nlohmann::json to_json() const;
    static CellResult from_json(const nlohmann::json& j);
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<double> n;
    std::vector<double> mean_risk;
    std::vector<double> std_error; // standard error of each mean over seeds; empty when not supplied
    double theoretical_exponent = 0.0;

    nlohmann::json to_json() const;
};

// OLS of ln(mean_risk) on ln(n). Needs >= 2 distinct n ("insufficient points"
// otherwise) and positive risks.
RateFit fit_rate(std::span<const double> n, std::span<const double> mean_risk);

struct StudyResult {
    std::vector<CellResult> cells; // ordered by (n, seed) as in the config
    std::optional<RateFit> fit;
    std::string fit_error;
    bool partial = false;
    std::string config_hash;
};

// Per-cell cache key: FNV-1a of the canonical config, n and seed, in hex.
std::string cell_key(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed);

// Samples, fits and scores every (n, seed) cell on `jobs` worker threads.
// Cells are cached under output_dir/cache; a failing cell is recorded and the
// study carries on. Writes results.csv, summary.csv and fit.json.
StudyResult run_rate_study(const ExperimentConfig& cfg, std::size_t jobs = 1);

// results.csv (n, seed, risk, stderr, status) and summary.csv with the phi_n overlay.
void emit_plot_data(const std::vector<CellResult>& cells, const CompositionSpec& spec,
                    const std::filesystem::path& dir);

// Reads back the tidy results.csv written by emit_plot_data.
std::vector<CellResult> read_results_csv(const std::filesystem::path& path);

} // namespace npmle
