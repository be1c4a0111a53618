#include <doctest.h>

#include "generators.hpp"

#include <npmle/datagen.hpp>
#include <npmle/errors.hpp>
#include <npmle/input_law.hpp>
#include <npmle/metrics.hpp>
#include <npmle/training.hpp>

#include <cmath>

using namespace npmle;

namespace {

ArchSpec small_arch(std::size_t d, std::size_t K) {
    return ArchSpec{2, {d, 6, 6, K}, 5.0, std::nullopt, Head::softmax};
}

} // namespace

TEST_CASE("training is deterministic and reduces the loss") {
    Dataset ds = sample_dataset(make_model("stock_gam"), 300, InputLaw::uniform(1), 2);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.restarts = 2;
    cfg.lr = 3e-3;
    cfg.seed = 4;
    TrainResult a = fit_npmle(small_arch(1, 2), ds, cfg);
    TrainResult b = fit_npmle(small_arch(1, 2), ds, cfg);
    CHECK(a.params == b.params);
    CHECK(a.final_loss == b.final_loss);
    CHECK(a.final_loss <= std::log(2.0));
    CHECK(a.restart_losses.size() == 2);
    CHECK(a.final_loss == *std::min_element(a.restart_losses.begin(), a.restart_losses.end()));
    CHECK(a.params.max_abs() <= 5.0);
    CHECK(a.steps == 2 * 60 * 2);
}

TEST_CASE("projection bound holds with a tight B") {
    Dataset ds = sample_dataset(make_model("logistic", {{"slope", 6.0}}), 200, InputLaw::uniform(1), 3);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.restarts = 1;
    cfg.lr = 0.05;
    cfg.B = 0.3;
    TrainResult r = fit_npmle(small_arch(1, 2), ds, cfg);
    CHECK(r.params.max_abs() <= 0.3);
    cfg.B = 50.0;
    CHECK_THROWS_AS(fit_npmle(small_arch(1, 2), ds, cfg), ArgumentError);
}

TEST_CASE("adding restarts never hurts") {
    Dataset ds = sample_dataset(make_model("stock_gam"), 150, InputLaw::uniform(1), 5);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.restarts = 1;
    double one = fit_npmle(small_arch(1, 2), ds, cfg).final_loss;
    cfg.restarts = 3;
    CHECK(fit_npmle(small_arch(1, 2), ds, cfg).final_loss <= one);
}

TEST_CASE("config validation and JSON round trip") {
    TrainConfig c;
    c.steps = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    TrainConfig d;
    d.lr = 0.01;
    d.min_steps = 77;
    d.schedule = Schedule::constant;
    d.B = 2.0;
    TrainConfig e = TrainConfig::from_json(d.to_json());
    CHECK(e.to_json() == d.to_json());
    CHECK_THROWS_AS(TrainConfig::from_json({{"schedule", "step"}}), ArgumentError);
}

TEST_CASE("wrong architectures are rejected") {
    Dataset ds = sample_dataset(make_model("stock_gam"), 20, InputLaw::uniform(1), 1);
    CHECK_THROWS_AS(fit_npmle(small_arch(2, 2), ds, TrainConfig{}), ArgumentError);
    CHECK_THROWS_AS(fit_npmle(small_arch(1, 3), ds, TrainConfig{}), ArgumentError);
}

TEST_CASE("exact finite ERM") {
    ConditionalProbability truth = [](std::span<const double>) { return std::vector<double>{0.8, 0.2}; };
    ConditionalProbability flat = [](std::span<const double>) { return std::vector<double>{0.5, 0.5}; };
    ConditionalProbability hard = [](std::span<const double>) { return std::vector<double>{1.0, 0.0}; };
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Dataset ds = sample_dataset(truth, 2, "t", 1000, InputLaw::uniform(1), seed);
        hits += fit_exact_finite({truth, flat}, ds).index == 0;
    }
    CHECK(hits >= 99);
    Dataset ds = sample_dataset(truth, 2, "t", 50, InputLaw::uniform(1), 1);
    CHECK(fit_exact_finite({flat}, ds).index == 0);
    CHECK(fit_exact_finite({flat, flat}, ds).index == 0);
    CHECK(std::isinf(empirical_nll(hard, ds)));
    CHECK_THROWS_AS(fit_exact_finite({hard}, ds), DegenerateModelError);
}
