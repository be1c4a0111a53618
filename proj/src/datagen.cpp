#include <npmle/datagen.hpp>

#include <npmle/errors.hpp>
#include <npmle/metrics.hpp>

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace npmle {

namespace {

constexpr int DATASET_SCHEMA_VERSION = 1;

std::filesystem::path sidecar(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("not a number: '" + s + "'", line);
    }
    return v;
}

} // namespace

RowMatrix Dataset::one_hot() const {
    RowMatrix Y = RowMatrix::Zero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(K));
    for (std::size_t i = 0; i < size(); ++i) {
        Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
    }
    return Y;
}

void Dataset::validate() const {
    if (static_cast<std::size_t>(X.rows()) != labels.size()) {
        throw DataError("input and label counts differ");
    }
    for (Eigen::Index i = 0; i < X.size(); ++i) {
        double v = X.data()[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DataError("input entry outside [0,1]");
        }
    }
    for (std::size_t y : labels) {
        if (y >= K) {
            throw DataError("label outside [1, K]");
        }
    }
}

bool Dataset::operator==(const Dataset& other) const {
    return X.rows() == other.X.rows() && X.cols() == other.X.cols() && X == other.X && labels == other.labels &&
           K == other.K && seed == other.seed && model_label == other.model_label;
}

Dataset sample_dataset(const ConditionalProbability& eta, std::size_t K, std::string label, std::size_t n,
                       const InputLaw& law, std::uint64_t seed) {
    if (n == 0) {
        throw ArgumentError("sample size must be at least 1");
    }
    Dataset ds;
    ds.K = K;
    ds.seed = seed;
    ds.model_label = std::move(label);
    ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(law.dim()));
    ds.labels.resize(n);
    RandomStream xs(seed, "datagen.x");
    RandomStream ys(seed, "datagen.y");
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> row(ds.X.data() + i * law.dim(), law.dim());
        law.sample(xs, row);
        std::vector<double> p = eta(row);
        if (p.size() != K) {
            throw DataError("eta returned the wrong number of classes");
        }
        require_simplex(p, row, "eta");
        ds.labels[i] = ys.categorical(p);
    }
    return ds;
}

Dataset sample_dataset(const TrueModel& model, std::size_t n, const InputLaw& law, std::uint64_t seed) {
    if (law.dim() != model.dim()) {
        throw ArgumentError("input law dimension does not match the model");
    }
    return sample_dataset(model.function(), model.classes(), model.label(), n, law, seed);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    std::size_t d = ds.dim();
    for (std::size_t j = 0; j < d; ++j) {
        out << 'x' << j + 1 << ',';
    }
    out << "label\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            out << buf << ',';
        }
        out << ds.labels[i] + 1 << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
    nlohmann::json meta = {{"schema_version", DATASET_SCHEMA_VERSION},
                           {"n", ds.size()},
                           {"d", d},
                           {"K", ds.K},
                           {"seed", ds.seed},
                           {"model_label", ds.model_label}};
    std::ofstream side(sidecar(path));
    if (!side) {
        throw IoError("cannot write " + sidecar(path).string());
    }
    side << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("missing header", 1);
    }
    std::vector<std::string> header = split(line);
    if (header.size() < 2 || header.back() != "label") {
        throw ParseError("header must be x1,...,xd,label", 1);
    }
    std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j] != "x" + std::to_string(j + 1)) {
            throw ParseError("header must be x1,...,xd,label", 1);
        }
    }
    std::optional<nlohmann::json> meta;
    if (std::filesystem::exists(sidecar(path))) {
        std::ifstream side(sidecar(path));
        try {
            meta = nlohmann::json::parse(side);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad sidecar: ") + e.what(), 1);
        }
    }
    std::size_t K = meta ? meta->value("K", std::size_t{0}) : 0;
    std::vector<double> xs;
    std::vector<std::size_t> labels;
    std::size_t lineno = 1;
    bool ended_with_newline = true;
    while (std::getline(in, line)) {
        ++lineno;
        ended_with_newline = !in.eof();
        if (line.empty()) {
            throw ParseError("empty record", lineno);
        }
        std::vector<std::string> cells = split(line);
        if (cells.size() != d + 1) {
            throw ParseError("expected " + std::to_string(d + 1) + " fields, found " + std::to_string(cells.size()),
                             lineno);
        }
        for (std::size_t j = 0; j < d; ++j) {
            double v = parse_double(cells[j], lineno);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ParseError("input outside [0,1]", lineno);
            }
            xs.push_back(v);
        }
        double y = parse_double(cells[d], lineno);
        if (y != std::floor(y) || y < 1.0 || (K > 0 && y > static_cast<double>(K))) {
            throw ParseError("label outside [1, K]", lineno);
        }
        labels.push_back(static_cast<std::size_t>(y) - 1);
    }
    if (!ended_with_newline) {
        throw ParseError("truncated record (no line terminator)", lineno);
    }
    if (meta && meta->contains("n") && meta->at("n").get<std::size_t>() != labels.size()) {
        throw ParseError("file has " + std::to_string(labels.size()) + " records but metadata says " +
                             std::to_string(meta->at("n").get<std::size_t>()),
                         lineno);
    }
    Dataset ds;
    ds.X = Eigen::Map<RowMatrix>(xs.data(), static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(d));
    ds.labels = std::move(labels);
    if (K == 0) {
        for (std::size_t y : ds.labels) {
            K = std::max(K, y + 1);
        }
        K = std::max<std::size_t>(K, 2);
    }
    ds.K = K;
    if (meta) {
        ds.seed = meta->value("seed", std::uint64_t{0});
        ds.model_label = meta->value("model_label", std::string());
    }
    return ds;
}

} // namespace npmle
