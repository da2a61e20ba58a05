#include "eod/svm/model_io.hpp"

#include <string>

#include "eod/error.hpp"
#include "eod/io.hpp"

namespace eod::svm {

namespace {

nlohmann::json rows_json(const Matrix& m) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto r = row_span(m, i);
    arr.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return arr;
}

Matrix rows_from_json(const nlohmann::json& j, std::size_t dim) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  for (const auto& r : rows)
    require(r.size() == dim, ErrorCode::dimension_mismatch,
            "model file: support vector dimension differs from 'dim'");
  Matrix m = rows_to_matrix(rows);
  if (rows.empty()) m.resize(0, static_cast<Eigen::Index>(dim));
  return m;
}

void check_header(const nlohmann::json& j, const char* type) {
  require(j.value("format_version", 0) == kModelFormatVersion, ErrorCode::parse_error,
          "model file: unsupported format_version");
  require(j.value("type", std::string()) == type, ErrorCode::parse_error,
          std::string("model file: expected type '") + type + "'");
}

}  // namespace

nlohmann::json to_json(const BinarySvmModel& m) {
  return {{"format_version", kModelFormatVersion},
          {"type", "binary_svm"},
          {"kernel", {{"type", "rbf"}, {"sigma", m.kernel.sigma}}},
          {"c", m.c},
          {"bias", m.bias},
          {"dim", m.dim()},
          {"coefficients", m.coef},
          {"support_vectors", rows_json(m.support_vectors)}};
}

BinarySvmModel binary_model_from_json(const nlohmann::json& j) {
  try {
    check_header(j, "binary_svm");
    BinarySvmModel m;
    m.kernel.sigma = j.at("kernel").at("sigma").get<double>();
    m.kernel.validate();
    m.c = j.at("c").get<double>();
    m.bias = j.at("bias").get<double>();
    m.coef = j.at("coefficients").get<std::vector<double>>();
    m.support_vectors = rows_from_json(j.at("support_vectors"), j.at("dim").get<std::size_t>());
    require(m.coef.size() == static_cast<std::size_t>(m.support_vectors.rows()),
            ErrorCode::parse_error, "model file: coefficient count differs from support vectors");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("model file: ") + e.what());
  }
}

nlohmann::json to_json(const OneClassSvmModel& m) {
  return {{"format_version", kModelFormatVersion},
          {"type", "one_class_svm"},
          {"kernel", {{"type", "rbf"}, {"sigma", m.kernel.sigma}}},
          {"nu", m.nu},
          {"rho", m.rho},
          {"dim", m.dim()},
          {"coefficients", m.alphas},
          {"support_vectors", rows_json(m.support_vectors)}};
}

OneClassSvmModel one_class_model_from_json(const nlohmann::json& j) {
  try {
    check_header(j, "one_class_svm");
    OneClassSvmModel m;
    m.kernel.sigma = j.at("kernel").at("sigma").get<double>();
    m.kernel.validate();
    m.nu = j.at("nu").get<double>();
    m.rho = j.at("rho").get<double>();
    m.alphas = j.at("coefficients").get<std::vector<double>>();
    m.support_vectors = rows_from_json(j.at("support_vectors"), j.at("dim").get<std::size_t>());
    require(m.alphas.size() == static_cast<std::size_t>(m.support_vectors.rows()),
            ErrorCode::parse_error, "model file: coefficient count differs from support vectors");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const BinarySvmModel& m) {
  write_text_atomic(path, to_json(m).dump() + "\n");
}

BinarySvmModel load_binary_model(const std::filesystem::path& path) {
  return binary_model_from_json(read_json_file(path));
}

}  // namespace eod::svm
