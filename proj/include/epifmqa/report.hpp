#pragma once

#include <iosfwd>
#include <initializer_list>
#include <string>
#include <string_view>

#include "epifmqa/fmqa.hpp"
#include "json.hpp"

namespace epifmqa {

/// Shortest-round-trip text for a double ("%.17g").
std::string format_real(double x);

// Trace files are tab-separated with a header line
//   iteration  origin  loci  cer
// where loci is a comma-joined index list.
void write_trace(std::ostream& out, const RunTrace& trace);
RunTrace parse_trace(std::istream& in);

/// Wall time is only emitted when `include_time` is set so that output is
/// reproducible byte for byte.
nlohmann::json result_to_json(const RunResult& result, const RunConfig& cfg,
                              bool include_time = false);
RunResult result_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const RunConfig& cfg);
/// Overlays the keys present in `j` onto `base`.
/// Throws ContractViolation naming the first key of `j` not in `allowed`.
void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                        const std::string& context);

RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

}  // namespace epifmqa
