#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "lipcert/baselines.hpp"
#include "lipcert/solver.hpp"

namespace lipcert {

inline constexpr const char* kToolVersion = "0.1.0";

// ISO-8601 UTC timestamp. Honors SOURCE_DATE_EPOCH so golden reports stay
// byte-identical across runs; the same switch zeroes reported runtimes.
std::string report_timestamp();
bool deterministic_report_mode();
double report_runtime(double measured_seconds);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const SolveResult& result);

// CSV row in the fixed column order: model, method, norm, value,
// runtime_seconds.
std::string csv_header();
std::string csv_row(const std::string& model_path, const BoundReport& report);

}  // namespace lipcert
