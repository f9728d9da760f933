#include "lssp/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace lssp {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<double> to_std(const Eigen::Ref<const Vector>& v) { return {v.data(), v.data() + v.size()}; }

ordered_json rows_of(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_std(m.row(r).transpose()));
    return rows;
}

Matrix matrix_from(const ordered_json& rows, Eigen::Index n_rows, Eigen::Index n_cols, const char* field) {
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n_rows) {
        throw ShapeError(std::string("model file: '") + field + "' has the wrong number of rows");
    }
    Matrix m(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols) {
            throw ShapeError(std::string("model file: '") + field + "' row " + std::to_string(r) +
                             " has the wrong length");
        }
        for (Eigen::Index c = 0; c < n_cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace

void write_model(std::ostream& os, const LinearSsp& ssp) {
    ordered_json j;
    j["format"] = "lssp-linear-ssp";
    j["format_version"] = kModelFormatVersion;
    j["n_states"] = ssp.n_states();
    j["n_actions"] = ssp.n_actions();
    j["dim"] = ssp.dim();
    j["goal"] = ssp.goal();
    j["features"] = rows_of(ssp.features.table());
    j["theta"] = to_std(ssp.theta);
    j["mu"] = rows_of(ssp.mu);
    os << j.dump(1) << '\n';
}

LinearSsp read_model(std::istream& is) {
    ordered_json j;
    try {
        j = ordered_json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("model file: ") + e.what());
    }
    if (j.value("format", std::string{}) != "lssp-linear-ssp") {
        throw std::runtime_error("model file: missing or unknown 'format'");
    }
    const int version = j.value("format_version", -1);
    if (version != kModelFormatVersion) {
        throw std::runtime_error("model file: unsupported format_version " + std::to_string(version));
    }
    const int n_states = j.at("n_states").get<int>();
    const int n_actions = j.at("n_actions").get<int>();
    const int dim = j.at("dim").get<int>();
    const int goal = j.at("goal").get<int>();
    if (n_states < 1 || n_actions < 1 || dim < 1) throw ShapeError("model file: non-positive dimension");

    LinearSsp ssp;
    ssp.features = FeatureMap(n_states, n_actions, goal,
                              matrix_from(j.at("features"), static_cast<Eigen::Index>(n_states) * n_actions, dim,
                                          "features"));
    const auto theta = j.at("theta").get<std::vector<double>>();
    if (static_cast<int>(theta.size()) != dim) throw ShapeError("model file: 'theta' has the wrong length");
    ssp.theta = Eigen::Map<const Vector>(theta.data(), dim);
    ssp.mu = matrix_from(j.at("mu"), n_states, dim, "mu");
    return ssp;
}

void save_model(const std::string& path, const LinearSsp& ssp) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_model(os, ssp);
}

LinearSsp load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_model(is);
}

}  // namespace lssp
