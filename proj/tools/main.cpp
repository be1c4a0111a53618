#include <npmle/datagen.hpp>
#include <npmle/errors.hpp>
#include <npmle/harness.hpp>
#include <npmle/metrics.hpp>
#include <npmle/minimax.hpp>
#include <npmle/models.hpp>
#include <npmle/network.hpp>
#include <npmle/special_networks.hpp>
#include <npmle/theory.hpp>
#include <npmle/training.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw npmle::IoError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw npmle::ParseError(path + ": " + e.what(), 0);
    }
}

json parse_inline(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw npmle::ArgumentError(std::string("bad JSON for ") + what + ": " + e.what());
    }
}

void emit(const json& j, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out);
    if (!f) {
        throw npmle::IoError("cannot write " + out);
    }
    f << j.dump(2) << "\n";
}

npmle::InputLaw make_law(const std::string& name, std::size_t dim, double weight) {
    if (name == "uniform") {
        return npmle::InputLaw::uniform(dim);
    }
    if (name == "mixture") {
        return npmle::InputLaw::mixture(dim, weight);
    }
    throw npmle::ArgumentError("unknown input law '" + name + "'");
}

struct Globals {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t jobs = 1;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"npmle: softmax network NPMLE experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out", g.out, "Output path (file or directory)");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::string model_name = "stock_gam", model_params = "{}", law_name = "uniform";
    double mixture_weight = 0.5;

    // datagen
    auto* datagen = app.add_subcommand("datagen", "Sample a labelled dataset from a catalog model");
    std::size_t n = 1000;
    datagen->add_option("--model", model_name, "Catalog model name");
    datagen->add_option("--params", model_params, "Model parameters as JSON");
    datagen->add_option("--law", law_name, "Input law: uniform | mixture");
    datagen->add_option("--mixture-weight", mixture_weight);
    datagen->add_option("-n,--n", n, "Sample size")->check(CLI::PositiveNumber);

    // train
    auto* train = app.add_subcommand("train", "Fit a softmax network by projected Adam");
    std::string data_path, arch_path;
    train->add_option("--data", data_path, "Dataset CSV")->required();
    train->add_option("--model", model_name, "Catalog model supplying the composition spec for theory architectures");
    train->add_option("--params", model_params);
    train->add_option("--arch", arch_path, "Architecture JSON (default: theory prescription)");

    // risk
    auto* risk_cmd = app.add_subcommand("risk", "Hellinger / KL risk of a fitted network against a catalog model");
    std::string net_path, method = "auto";
    std::size_t budget = 0;
    double kl_cap = 0.0;
    risk_cmd->add_option("--net", net_path, "Network JSON")->required();
    risk_cmd->add_option("--model", model_name);
    risk_cmd->add_option("--params", model_params);
    risk_cmd->add_option("--law", law_name);
    risk_cmd->add_option("--mixture-weight", mixture_weight);
    risk_cmd->add_option("--method", method, "auto | quadrature | mc");
    risk_cmd->add_option("--budget", budget, "Monte Carlo samples or quadrature cells");
    risk_cmd->add_option("--kl-cap", kl_cap, "Also report truncated KL with this cap");

    // theory
    auto* theory = app.add_subcommand("theory", "Theory calculators for a composition spec");
    double theory_n = 1024;
    std::string sparsity = "rate";
    theory->add_option("--model", model_name);
    theory->add_option("--params", model_params);
    theory->add_option("-n,--n", theory_n)->check(CLI::PositiveNumber);
    theory->add_option("--sparsity", sparsity, "rate | grid");

    // rate-study
    auto* study = app.add_subcommand("rate-study", "Risk-versus-n study over seeds (needs --config)");

    // minimax
    auto* minimax = app.add_subcommand("minimax", "Lower-bound hypothesis construction and checks");
    double mm_n = 50, mm_beta = 1.0, mm_B = 1.0;
    std::size_t mm_K = 2, mm_t = 1, mm_cap = 64, mm_sample = 0, mm_order = 30, mm_pairs = 0;
    minimax->add_option("-n,--n", mm_n);
    minimax->add_option("-K,--classes", mm_K);
    minimax->add_option("--beta-star", mm_beta);
    minimax->add_option("--t-star", mm_t);
    minimax->add_option("--B", mm_B, "Exponent prod_{l>i} min(beta_l, 1)");
    minimax->add_option("--law", law_name);
    minimax->add_option("--mixture-weight", mixture_weight);
    minimax->add_option("--cap", mm_cap, "Packing size cap");
    minimax->add_option("--order", mm_order, "Gauss-Legendre order per cell");
    minimax->add_option("--pairs", mm_pairs, "Verify only the first this many pairs (0: all)");
    minimax->add_option("--sample", mm_sample, "Also write a dataset of this size from the last hypothesis");

    // approx-net
    auto* approx = app.add_subcommand("approx-net", "Explicit ReLU network for log(max(x, 4/M))");
    double M = 100;
    approx->add_option("-M,--M", M)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        auto model_ref = [&] { return json{{"name", model_name}, {"params", parse_inline(model_params, "--params")}}; };

        if (*datagen) {
            npmle::TrueModel model = npmle::make_model(model_ref());
            npmle::Dataset ds = npmle::sample_dataset(model, n, make_law(law_name, model.dim(), mixture_weight), g.seed);
            std::string out = g.out.empty() ? "data.csv" : g.out;
            npmle::save_dataset(ds, out);
            std::cout << "wrote " << out << " (n=" << ds.labels.size() << ", d=" << ds.X.cols() << ", K=" << ds.K
                      << ")\n";
        } else if (*train) {
            npmle::Dataset ds = npmle::load_dataset(data_path);
            npmle::TrainConfig cfg = g.config.empty() ? npmle::TrainConfig{} : npmle::TrainConfig::from_json(read_json(g.config));
            cfg.seed = g.seed;
            npmle::ArchSpec arch;
            if (!arch_path.empty()) {
                arch = npmle::ArchSpec::from_json(read_json(arch_path));
            } else {
                npmle::TrueModel model = npmle::make_model(model_ref());
                arch = npmle::architecture_from_theory(model.spec(), static_cast<double>(ds.labels.size()));
            }
            npmle::TrainResult r = npmle::fit_npmle(arch, ds, cfg);
            npmle::Network net{arch, r.params};
            json out = net.to_json();
            out["training"] = r.to_json();
            emit(out, g.out.empty() ? "net.json" : g.out);
            std::cout << "final loss " << r.final_loss << " after " << r.steps << " steps\n";
        } else if (*risk_cmd) {
            npmle::TrueModel model = npmle::make_model(model_ref());
            npmle::Network net = npmle::Network::from_json(read_json(net_path));
            npmle::InputLaw law = make_law(law_name, model.dim(), mixture_weight);
            npmle::RiskOptions ro;
            ro.method = npmle::risk_method_from_string(method);
            if (budget > 0) {
                ro.budget = budget;
            }
            ro.seed = g.seed;
            npmle::RiskEstimate h = npmle::risk(model.function(), net.function(), law, ro);
            npmle::RiskEstimate k = npmle::risk_kl(model.function(), net.function(), law, ro);
            json out = {{"hellinger", {{"value", h.value}, {"error", h.error}, {"method", npmle::to_string(h.method)}}},
                        {"kl", {{"value", k.value}, {"error", k.error}}}};
            if (kl_cap > 0.0) {
                npmle::RiskEstimate t = npmle::risk_truncated_kl(model.function(), net.function(), kl_cap, law, ro);
                out["truncated_kl"] = {{"B", kl_cap}, {"value", t.value}, {"error", t.error}};
            }
            emit(out, g.out);
        } else if (*theory) {
            npmle::CompositionSpec spec = g.config.empty() ? npmle::make_model(model_ref()).spec()
                                                           : npmle::CompositionSpec::from_json(read_json(g.config));
            npmle::SparsityForm form;
            if (sparsity == "rate") {
                form = npmle::SparsityForm::rate;
            } else if (sparsity == "grid") {
                form = npmle::SparsityForm::grid;
            } else {
                throw npmle::ArgumentError("unknown sparsity form '" + sparsity + "'");
            }
            npmle::TheoryPipeline p = npmle::theory_pipeline(spec, theory_n, form);
            npmle::RateValue phi = npmle::rate_phi_n(spec, theory_n);
            npmle::ArchSpec arch = npmle::architecture_from_theory(spec, theory_n);
            json out = {{"spec", spec.to_json()},
                        {"beta_star", npmle::effective_smoothness(spec)},
                        {"phi_n", {{"value", phi.value}, {"index", phi.index}, {"exponent", -phi.exponent}}},
                        {"architecture", arch.to_json()},
                        {"pipeline",
                         {{"n", p.n}, {"phi", p.phi}, {"N", p.N}, {"s", p.s}, {"L", p.L}, {"m_inf", p.m_inf},
                          {"B", p.B}, {"A", p.A}, {"delta_n", p.delta_n}, {"approx_risk", p.approx_risk},
                          {"rhs", p.rhs}}}};
            emit(out, g.out);
        } else if (*study) {
            if (g.config.empty()) {
                throw npmle::ArgumentError("rate-study needs --config");
            }
            npmle::ExperimentConfig cfg = npmle::load_experiment_config(g.config);
            if (!g.out.empty()) {
                cfg.output_dir = g.out;
            }
            npmle::StudyResult r = npmle::run_rate_study(cfg, g.jobs);
            std::size_t failed = 0, cached = 0;
            for (const auto& c : r.cells) {
                failed += !c.ok;
                cached += c.cached;
            }
            std::cout << "cells " << r.cells.size() << " (cached " << cached << ", failed " << failed << ")\n";
            if (r.fit) {
                std::printf("slope %.4f (theory %.4f), r^2 %.4f\n", r.fit->slope, r.fit->theoretical_exponent,
                            r.fit->r_squared);
            } else {
                std::cout << "no fit: " << r.fit_error << "\n";
            }
            std::cout << "results in " << cfg.output_dir.string() << "\n";
        } else if (*minimax) {
            npmle::InputLaw law = make_law(law_name, mm_t, mixture_weight);
            npmle::BumpSpec bs = npmle::make_bump_spec(mm_beta, mm_t, mm_B, mm_n, mm_K, law.Gamma());
            npmle::HypothesisSet hs = npmle::build_hypotheses(mm_n, mm_K, bs, mm_t, mm_cap, g.seed);
            npmle::QuadratureOptions q;
            q.order = mm_order;
            json pairs = json::array();
            std::size_t count = 0, stated = 0, half = 0;
            for (std::size_t i = 0; i < hs.W.size(); ++i) {
                for (std::size_t j = i + 1; j < hs.W.size(); ++j) {
                    if (mm_pairs > 0 && count >= mm_pairs) {
                        break;
                    }
                    npmle::SeparationReport s = npmle::verify_separation(hs, i, j, law, law.gamma(), q);
                    stated += s.stated_holds;
                    half += s.half_holds;
                    ++count;
                    pairs.push_back(s.to_json());
                }
            }
            npmle::KlBudgetReport kl = npmle::verify_kl_budget(hs, mm_n, law, law.Gamma(), q);
            npmle::Smallness sm = npmle::smallness(bs, mm_n, static_cast<double>(mm_K));
            json out = {{"hypotheses", hs.to_json()},
                        {"smallness", {{"lhs", sm.lhs}, {"rhs", sm.rhs}, {"holds", sm.holds()}}},
                        {"separation",
                         {{"pairs", count}, {"stated_holds", stated}, {"half_holds", half}, {"reports", pairs}}},
                        {"kl_budget", kl.to_json()}};
            if (mm_sample > 0) {
                std::size_t idx = hs.W.size() - 1;
                npmle::Dataset ds = npmle::sample_dataset(hs.function(idx), mm_K, "minimax_W" + std::to_string(idx),
                                                          mm_sample, law, g.seed);
                std::string path = (g.out.empty() ? std::string("minimax") : g.out) + "_sample.csv";
                npmle::save_dataset(ds, path);
                out["sample"] = path;
            }
            emit(out, g.out.empty() ? "" : g.out + ".json");
        } else if (*approx) {
            npmle::ExpLogNetwork e = npmle::build_exp_log_network(M);
            json out = e.net.to_json();
            out["M"] = e.M;
            out["knots"] = e.knots;
            out["max_error"] = e.max_error;
            out["floor_value"] = e.floor_value;
            emit(out, g.out);
        }
    } catch (const npmle::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return npmle::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
