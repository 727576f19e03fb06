#pragma once

#include <nlohmann/json.hpp>

#include "icsv/conneval.hpp"
#include "icsv/report.hpp"
#include "icsv/synthgen.hpp"

namespace icsv {

using Json = nlohmann::json;

Json box_to_json(const Box& b);
Box box_from_json(const Json& j);

Json error_log_to_json(const ErrorLog& log);
ErrorLog error_log_from_json(const Json& j);

Json report_to_json(const ErrorReport& report);
ErrorReport report_from_json(const Json& j);

Json score_to_json(const PRScore& score);

}  // namespace icsv
