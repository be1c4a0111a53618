#include <npmle/harness.hpp>

#include <npmle/datagen.hpp>
#include <npmle/errors.hpp>
#include <npmle/rng.hpp>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace npmle {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out << text;
        if (!out) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

void make_dirs(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

std::string to_string(ArchSource s) { return s == ArchSource::theory ? "theory" : "explicit"; }

ArchSource arch_source_from_string(const std::string& s) {
    if (s == "theory") {
        return ArchSource::theory;
    }
    if (s == "explicit") {
        return ArchSource::explicit_arch;
    }
    throw ArgumentError("unknown architecture source '" + s + "' (expected theory or explicit)");
}

ArchSpec cell_arch(const ExperimentConfig& cfg, const TrueModel& model, std::size_t n) {
    if (cfg.arch_source == ArchSource::theory) {
        return architecture_from_theory(model.spec(), static_cast<double>(n), cfg.constants);
    }
    return *cfg.arch;
}

CellResult run_cell(const ExperimentConfig& cfg, const TrueModel& model, const InputLaw& law, std::size_t n,
                    std::uint64_t seed) {
    CellResult cell;
    cell.n = n;
    cell.seed = seed;
    Dataset ds = sample_dataset(model, n, law, seed);
    ArchSpec arch = cell_arch(cfg, model, n);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    TrainResult fit = fit_npmle(arch, ds, tc);
    Network net{arch, fit.params};
    RiskOptions ro = cfg.risk;
    ro.seed = seed;
    RiskEstimate r = risk(model.function(), net.function(), law, ro);
    cell.risk = r.value;
    cell.risk_error = r.error;
    cell.final_loss = fit.final_loss;
    cell.steps = fit.steps;
    return cell;
}

} // namespace

void ExperimentConfig::validate() const {
    if (!model.is_object() || !model.contains("name")) {
        throw ArgumentError("config.model needs a name");
    }
    if (input_law != "uniform" && input_law != "mixture") {
        throw ArgumentError("config.input_law must be uniform or mixture, got '" + input_law + "'");
    }
    if (!(mixture_weight >= 0.0 && mixture_weight < 1.0)) {
        throw ArgumentError("config.mixture_weight must lie in [0, 1)");
    }
    if (n_grid.empty()) {
        throw ArgumentError("config.n_grid is empty");
    }
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 2) {
            throw ArgumentError("config.n_grid entries must be >= 2");
        }
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
            throw ArgumentError("config.n_grid must be strictly increasing");
        }
    }
    if (seeds.empty()) {
        throw ArgumentError("config.seeds is empty");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ArgumentError("config.seeds must be distinct");
    }
    if (arch_source == ArchSource::explicit_arch) {
        if (!arch) {
            throw ArgumentError("config.arch is required when arch_source is explicit");
        }
        arch->validate();
    }
    train.validate();
    if (risk.budget && *risk.budget == 0) {
        throw ArgumentError("config.risk.budget must be positive");
    }
}

InputLaw ExperimentConfig::law(std::size_t dim) const {
    return input_law == "mixture" ? InputLaw::mixture(dim, mixture_weight) : InputLaw::uniform(dim);
}

nlohmann::json ExperimentConfig::canonical_json() const {
    nlohmann::json j = to_json();
    j.erase("output_dir");
    return j;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = RESULT_SCHEMA_VERSION;
    j["model"] = model;
    j["input_law"] = input_law;
    j["mixture_weight"] = mixture_weight;
    j["n_grid"] = n_grid;
    j["seeds"] = seeds;
    j["arch_source"] = to_string(arch_source);
    j["constants"] = {{"c_L", constants.c_L}, {"c_m", constants.c_m}, {"c_B", constants.c_B}};
    if (arch) {
        j["arch"] = arch->to_json();
    }
    j["train"] = train.to_json();
    j["risk"] = {{"method", to_string(risk.method)}};
    if (risk.budget) {
        j["risk"]["budget"] = *risk.budget;
    }
    j["output_dir"] = output_dir.string();
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("model")) {
            c.model = j.at("model");
            if (!c.model.contains("params")) {
                c.model["params"] = nlohmann::json::object();
            }
        }
        c.input_law = j.value("input_law", c.input_law);
        c.mixture_weight = j.value("mixture_weight", c.mixture_weight);
        c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
        c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.arch_source = arch_source_from_string(j.value("arch_source", std::string("theory")));
        if (j.contains("constants")) {
            const auto& k = j.at("constants");
            c.constants.c_L = k.value("c_L", 1.0);
            c.constants.c_m = k.value("c_m", 1.0);
            c.constants.c_B = k.value("c_B", 1.0);
        }
        if (j.contains("arch")) {
            c.arch = ArchSpec::from_json(j.at("arch"));
        }
        if (j.contains("train")) {
            c.train = TrainConfig::from_json(j.at("train"));
        }
        if (j.contains("risk")) {
            const auto& r = j.at("risk");
            c.risk.method = risk_method_from_string(r.value("method", std::string("auto")));
            if (r.contains("budget")) {
                c.risk.budget = r.at("budget").get<std::size_t>();
            }
        }
        c.output_dir = j.value("output_dir", std::string("results"));
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("bad experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("bad JSON in ") + path.string() + ": " + e.what(), 0);
    }
    return ExperimentConfig::from_json(j);
}

nlohmann::json CellResult::to_json() const {
    return {{"n", n},
            {"seed", seed},
            {"risk", fmt17(risk)},
            {"risk_error", fmt17(risk_error)},
            {"final_loss", fmt17(final_loss)},
            {"steps", steps},
            {"ok", ok},
            {"error", error}};
}

CellResult CellResult::from_json(const nlohmann::json& j) {
    CellResult c;
    c.n = j.at("n").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.risk = std::stod(j.at("risk").get<std::string>());
    c.risk_error = std::stod(j.at("risk_error").get<std::string>());
    c.final_loss = std::stod(j.at("final_loss").get<std::string>());
    c.steps = j.at("steps").get<std::size_t>();
    c.ok = j.at("ok").get<bool>();
    c.error = j.at("error").get<std::string>();
    return c;
}

nlohmann::json RateFit::to_json() const {
    return {{"schema_version", RESULT_SCHEMA_VERSION},
            {"slope", slope},
            {"intercept", intercept},
            {"r_squared", r_squared},
            {"n", n},
            {"mean_risk", mean_risk},
            {"std_error", std_error},
            {"theoretical_exponent", theoretical_exponent}};
}

RateFit fit_rate(std::span<const double> n, std::span<const double> mean_risk) {
    if (n.size() != mean_risk.size()) {
        throw ArgumentError("fit_rate needs as many risks as sample sizes");
    }
    std::set<double> distinct(n.begin(), n.end());
    if (distinct.size() < 2) {
        throw ArgumentError("insufficient points: a rate fit needs at least two distinct n");
    }
    RateFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0)) {
            throw ArgumentError("fit_rate needs positive n");
        }
        if (!(mean_risk[i] > 0.0) || !std::isfinite(mean_risk[i])) {
            throw ArgumentError("fit_rate needs positive finite risks, got " + fmt17(mean_risk[i]) + " at n = " +
                                fmt17(n[i]));
        }
        lx.push_back(std::log(n[i]));
        ly.push_back(std::log(mean_risk[i]));
    }
    double k = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.n.assign(n.begin(), n.end());
    fit.mean_risk.assign(mean_risk.begin(), mean_risk.end());
    return fit;
}

std::string cell_key(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
    std::string text = cfg.canonical_json().dump() + "|n=" + std::to_string(n) + "|seed=" + std::to_string(seed);
    return hex64(fnv1a64(text));
}

void emit_plot_data(const std::vector<CellResult>& cells, const CompositionSpec& spec,
                    const std::filesystem::path& dir) {
    if (cells.empty()) {
        throw ArgumentError("no results to emit");
    }
    make_dirs(dir);
    std::ostringstream tidy;
    tidy << "n,seed,risk,stderr,status\n";
    std::map<std::size_t, std::vector<double>> by_n;
    std::map<std::size_t, std::size_t> failed;
    for (const auto& c : cells) {
        tidy << c.n << ',' << c.seed << ',' << fmt17(c.risk) << ',' << fmt17(c.risk_error) << ','
             << (c.ok ? "ok" : "failed") << '\n';
        if (c.ok) {
            by_n[c.n].push_back(c.risk);
        } else {
            ++failed[c.n];
            by_n[c.n];
        }
    }
    write_text(dir / "results.csv", tidy.str());

    std::ostringstream summary;
    summary << "n,mean_risk,std_error,count,failed,phi_n,phi_n_log3\n";
    for (const auto& [n, risks] : by_n) {
        double mean = NAN, se = NAN;
        if (!risks.empty()) {
            mean = 0.0;
            for (double r : risks) {
                mean += r;
            }
            mean /= static_cast<double>(risks.size());
            if (risks.size() > 1) {
                double ss = 0.0;
                for (double r : risks) {
                    ss += (r - mean) * (r - mean);
                }
                se = std::sqrt(ss / static_cast<double>(risks.size() - 1) / static_cast<double>(risks.size()));
            }
        }
        double nd = static_cast<double>(n);
        double phi = rate_phi_n(spec, nd).value;
        summary << n << ',' << fmt17(mean) << ',' << fmt17(se) << ',' << risks.size() << ',' << failed[n] << ','
                << fmt17(phi) << ',' << fmt17(phi * std::pow(std::log(nd), 3.0)) << '\n';
    }
    write_text(dir / "summary.csv", summary.str());
}

std::vector<CellResult> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "n,seed,risk,stderr,status") {
        throw ParseError("unexpected results header '" + line + "'", 1);
    }
    std::vector<CellResult> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) {
            f.push_back(item);
        }
        if (f.size() != 5) {
            throw ParseError("expected 5 fields", lineno);
        }
        CellResult c;
        try {
            c.n = std::stoull(f[0]);
            c.seed = std::stoull(f[1]);
            c.risk = std::stod(f[2]);
            c.risk_error = std::stod(f[3]);
        } catch (const std::exception&) {
            throw ParseError("bad number", lineno);
        }
        c.ok = f[4] == "ok";
        out.push_back(c);
    }
    return out;
}

StudyResult run_rate_study(const ExperimentConfig& cfg, std::size_t jobs) {
    cfg.validate();
    TrueModel model = make_model(cfg.model);
    InputLaw law = cfg.law(model.dim());
    if (cfg.arch_source == ArchSource::explicit_arch &&
        (cfg.arch->input_dim() != model.dim() || cfg.arch->output_dim() != model.classes())) {
        throw ArgumentError("explicit architecture does not match the model's input dimension and class count");
    }
    std::filesystem::path cache = cfg.output_dir / "cache";
    make_dirs(cache);

    StudyResult study;
    study.config_hash = hex64(fnv1a64(cfg.canonical_json().dump()));
    for (std::size_t n : cfg.n_grid) {
        for (std::uint64_t seed : cfg.seeds) {
            CellResult c;
            c.n = n;
            c.seed = seed;
            study.cells.push_back(c);
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < study.cells.size(); i = next++) {
            CellResult& slot = study.cells[i];
            std::filesystem::path file = cache / (cell_key(cfg, slot.n, slot.seed) + ".json");
            if (std::filesystem::exists(file)) {
                try {
                    std::ifstream in(file);
                    CellResult c = CellResult::from_json(nlohmann::json::parse(in));
                    if (c.n == slot.n && c.seed == slot.seed) {
                        c.cached = true;
                        slot = c;
                        continue;
                    }
                } catch (const std::exception&) {
                    // unreadable entry: recompute
                }
            }
            CellResult c;
            try {
                c = run_cell(cfg, model, law, slot.n, slot.seed);
            } catch (const std::exception& e) {
                c.n = slot.n;
                c.seed = slot.seed;
                c.ok = false;
                c.risk = NAN;
                c.risk_error = NAN;
                c.final_loss = NAN;
                c.error = e.what();
            }
            slot = c;
            if (c.ok) {
                write_text(file, c.to_json().dump(2) + "\n");
            }
        }
    };
    std::size_t threads = std::max<std::size_t>(1, std::min(jobs, study.cells.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    emit_plot_data(study.cells, model.spec(), cfg.output_dir);

    std::vector<double> ns, means, ses;
    for (std::size_t n : cfg.n_grid) {
        std::vector<double> risks;
        for (const auto& c : study.cells) {
            if (c.n == n && c.ok) {
                risks.push_back(c.risk);
            }
            if (c.n == n && !c.ok) {
                study.partial = true;
            }
        }
        if (risks.empty()) {
            continue;
        }
        double mean = 0.0;
        for (double r : risks) {
            mean += r;
        }
        mean /= static_cast<double>(risks.size());
        double ss = 0.0;
        for (double r : risks) {
            ss += (r - mean) * (r - mean);
        }
        ns.push_back(static_cast<double>(n));
        means.push_back(mean);
        ses.push_back(risks.size() > 1 ? std::sqrt(ss / static_cast<double>(risks.size() - 1) /
                                                   static_cast<double>(risks.size()))
                                       : NAN);
    }

    nlohmann::json out;
    out["schema_version"] = RESULT_SCHEMA_VERSION;
    out["config_hash"] = study.config_hash;
    out["partial"] = study.partial;
    out["config"] = cfg.canonical_json();
    try {
        RateFit fit = fit_rate(ns, means);
        fit.std_error = ses;
        fit.theoretical_exponent = -model.phi(static_cast<double>(cfg.n_grid.back())).exponent;
        study.fit = fit;
        out["fit"] = fit.to_json();
    } catch (const ArgumentError& e) {
        study.fit_error = e.what();
        out["fit"] = nullptr;
        out["fit_error"] = study.fit_error;
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& c : study.cells) {
        if (!c.ok) {
            failures.push_back({{"n", c.n}, {"seed", c.seed}, {"error", c.error}});
        }
    }
    out["failures"] = failures;
    write_text(cfg.output_dir / "fit.json", out.dump(2) + "\n");
    return study;
}

} // namespace npmle
