#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "zrp/model.hpp"

namespace zrp {

inline constexpr const char* kReportSchema = "zrp-report/1";

inline nlohmann::json params_to_json(const ModelParams& p) {
    nlohmann::json j;
    if (p.family == RateFamily::PowerLaw) {
        j["family"] = "power_law";
        j["b"] = p.b;
    } else {
        j["family"] = "stretched";
        j["beta"] = p.beta;
        j["lambda"] = p.lambda;
    }
    return j;
}

inline nlohmann::json make_report(const std::string& experiment) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["experiment"] = experiment;
    return j;
}

inline void emit_report(const nlohmann::json& report, const std::string& path) {
    if (path.empty() || path == "-") {
        std::fputs(report.dump(2).c_str(), stdout);
        std::fputc('\n', stdout);
        return;
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open report path " + path);
    os << report.dump(2) << "\n";
}

}  // namespace zrp
