#include "lipcert/report.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <sstream>

namespace lipcert {

bool deterministic_report_mode() { return std::getenv("SOURCE_DATE_EPOCH") != nullptr; }

std::string report_timestamp() {
    std::time_t now = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

double report_runtime(double measured_seconds) {
    return deterministic_report_mode() ? 0.0 : measured_seconds;
}

nlohmann::json to_json(const BoundReport& report) {
    nlohmann::json j;
    j["method"] = to_string(report.method);
    j["norm"] = to_string(report.norm);
    j["value"] = report.value;
    j["bound_kind"] = report.lower_bound ? "lower" : "upper";
    j["runtime_seconds"] = report_runtime(report.runtime_seconds);
    if (!report.metadata.empty()) j["metadata"] = report.metadata;
    return j;
}

nlohmann::json to_json(const SolveResult& result) {
    nlohmann::json j;
    j["status"] = to_string(result.status);
    j["iterations"] = result.iterations;
    if (std::isfinite(result.rho)) j["rho"] = result.rho;
    if (std::isfinite(result.lipschitz_bound)) j["lipschitz_bound"] = result.lipschitz_bound;
    if (std::isfinite(result.primal_obj)) j["primal_obj"] = result.primal_obj;
    if (std::isfinite(result.dual_obj)) j["dual_obj"] = result.dual_obj;
    j["kkt"] = {{"primal_feas", result.kkt.primal_feas},
                {"dual_feas", result.kkt.dual_feas},
                {"gap", result.kkt.gap}};
    return j;
}

std::string csv_header() { return "model,method,norm,value,runtime_seconds"; }

std::string csv_row(const std::string& model_path, const BoundReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << model_path << "," << to_string(report.method) << "," << to_string(report.norm)
        << "," << report.value << "," << report_runtime(report.runtime_seconds);
    return out.str();
}

}  // namespace lipcert
