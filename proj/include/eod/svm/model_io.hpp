#pragma once

#include <filesystem>

#include <json.hpp>

#include "eod/svm/binary_svm.hpp"
#include "eod/svm/one_class_svm.hpp"

namespace eod::svm {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const BinarySvmModel& m);
BinarySvmModel binary_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OneClassSvmModel& m);
OneClassSvmModel one_class_model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const BinarySvmModel& m);
BinarySvmModel load_binary_model(const std::filesystem::path& path);

}  // namespace eod::svm
