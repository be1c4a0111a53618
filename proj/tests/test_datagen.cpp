#include <doctest.h>

#include <npmle/datagen.hpp>
#include <npmle/errors.hpp>
#include <npmle/input_law.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace npmle;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "npmle_test_datagen";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

} // namespace

TEST_CASE("sampling is deterministic in the seed") {
    TrueModel m = make_model("stock_gam");
    Dataset a = sample_dataset(m, 500, InputLaw::uniform(1), 9);
    Dataset b = sample_dataset(m, 500, InputLaw::uniform(1), 9);
    Dataset c = sample_dataset(m, 500, InputLaw::uniform(1), 10);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK_NOTHROW(a.validate());
    CHECK(a.one_hot().rows() == 500);
    CHECK(a.one_hot().row(0).sum() == 1.0);
}

TEST_CASE("label frequencies follow eta") {
    ConditionalProbability eta = [](std::span<const double>) { return std::vector<double>{0.2, 0.3, 0.5}; };
    Dataset ds = sample_dataset(eta, 3, "const", 20000, InputLaw::uniform(2), 4);
    std::vector<double> f(3, 0.0);
    for (auto y : ds.labels) {
        f[y] += 1.0 / 20000.0;
    }
    CHECK(std::fabs(f[0] - 0.2) < 0.015);
    CHECK(std::fabs(f[2] - 0.5) < 0.015);
}

TEST_CASE("mixture law puts more mass near the centre") {
    InputLaw law = InputLaw::mixture(1, 0.5);
    RandomStream s(5, "test.law");
    int centre = 0;
    for (int i = 0; i < 20000; ++i) {
        double x = law.sample(s)[0];
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        centre += std::fabs(x - 0.5) < 0.25;
    }
    // P(|X - 1/2| < 1/4) = 0.5 * 0.5 + 0.5 * 0.6875
    CHECK(std::fabs(centre / 20000.0 - 0.59375) < 0.015);
    CHECK(law.gamma() == doctest::Approx(0.5));
    CHECK(law.Gamma() == doctest::Approx(1.25));
}

TEST_CASE("off-simplex truths are rejected") {
    ConditionalProbability bad = [](std::span<const double>) { return std::vector<double>{0.6, 0.6}; };
    CHECK_THROWS_AS(sample_dataset(bad, 2, "bad", 10, InputLaw::uniform(1), 1), DataError);
}

TEST_CASE("save and load round trip") {
    Dataset a = sample_dataset(make_model("stock_gam"), 200, InputLaw::mixture(1), 3);
    auto path = scratch("round.csv");
    save_dataset(a, path);
    CHECK(std::filesystem::exists(path.string() + ".json"));
    Dataset b = load_dataset(path);
    CHECK(a == b);
    CHECK(b.model_label == "stock_gam");
}

TEST_CASE("malformed files raise parse errors with line numbers") {
    auto p = scratch("bad.csv");
    auto expect_line = [&](const std::string& text, std::size_t line) {
        std::filesystem::remove(p.string() + ".json");
        write(p, text);
        try {
            load_dataset(p);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == line);
        }
    };
    expect_line("x,label\n0.5,1\n", 1);
    expect_line("x1,label\n0.5,1\n0.2\n", 3);
    expect_line("x1,label\n0.5,1\nabc,2\n", 3);
    expect_line("x1,label\n1.5,1\n", 2);
    expect_line("x1,label\n0.5,0\n", 2);
    expect_line("x1,label\n0.5,1\n0.25,2", 3);
}

TEST_CASE("sidecar class count bounds labels") {
    Dataset a = sample_dataset(make_model("stock_gam"), 20, InputLaw::uniform(1), 3);
    auto path = scratch("sidecar.csv");
    save_dataset(a, path);
    std::ofstream(path, std::ios::app) << "0.5,3\n";
    CHECK_THROWS_AS(load_dataset(path), ParseError);
}

TEST_CASE("missing files raise io errors") {
    CHECK_THROWS_AS(load_dataset(scratch("absent.csv")), IoError);
}
