#include "xmorph/serialize.hpp"

#include "xmorph/error.hpp"

#include <fstream>

namespace xmorph::io {

using nlohmann::json;

json to_json(const Eigen::MatrixXd& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

json to_json(const Eigen::VectorXd& v) {
    json data = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v[i]);
    return data;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        const auto& data = j.at("data");
        if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
            throw Error(ErrorCode::SchemaViolation, "matrix data length does not match rows*cols");
        }
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("matrix: ") + e.what());
    }
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::SchemaViolation, "vector must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
}

void require_format(const json& doc, const std::string& expected) {
    if (!doc.is_object() || !doc.contains("format") || doc["format"] != expected) {
        throw Error(ErrorCode::SchemaViolation, "expected format tag '" + expected + "'");
    }
}

}  // namespace xmorph::io
