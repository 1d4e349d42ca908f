#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <string>

namespace xmorph::io {

// Matrices are stored as {"rows", "cols", "data"} with row-major data.
nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

// Throws SchemaViolation unless doc["format"] == expected.
void require_format(const nlohmann::json& doc, const std::string& expected);

}  // namespace xmorph::io
