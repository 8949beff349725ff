#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

#include "netadjust/diagnostics.hpp"
#include "netadjust/error.hpp"
#include "netadjust/log.hpp"

namespace netadjust {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kSchema: return "schema violation";
    case ErrorCode::kMissingCell: return "missing cell";
    case ErrorCode::kOutOfRange: return "value out of range";
    case ErrorCode::kDuplicateKey: return "duplicate key";
    case ErrorCode::kInfiniteHazard: return "infinite hazard";
    case ErrorCode::kInconsistentInputs: return "inconsistent inputs";
    case ErrorCode::kExtrapolation: return "extrapolation failure";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown";
}

void Diagnostics::merge(const Diagnostics& o) {
  lifetable_clamps += o.lifetable_clamps;
  incidence_clamps += o.incidence_clamps;
  stratum_clamps += o.stratum_clamps;
  stratum_merges += o.stratum_merges;
  missing_incidence_cells += o.missing_incidence_cells;
  incidence_clips += o.incidence_clips;
  extrapolation_fallbacks += o.extrapolation_fallbacks;
  negative_slope_clips += o.negative_slope_clips;
  interpolation_zero_endpoints += o.interpolation_zero_endpoints;
  sp_clips += o.sp_clips;
  monotonicity_guards += o.monotonicity_guards;
  sp_below_lifetable += o.sp_below_lifetable;
  weight_caps += o.weight_caps;
  empty_risk_sets += o.empty_risk_sets;
  excluded_replicates += o.excluded_replicates;
}

std::vector<std::pair<std::string, std::uint64_t>> Diagnostics::items() const {
  return {
      {"lifetable_clamps", lifetable_clamps},
      {"incidence_clamps", incidence_clamps},
      {"stratum_clamps", stratum_clamps},
      {"stratum_merges", stratum_merges},
      {"missing_incidence_cells", missing_incidence_cells},
      {"incidence_clips", incidence_clips},
      {"extrapolation_fallbacks", extrapolation_fallbacks},
      {"negative_slope_clips", negative_slope_clips},
      {"interpolation_zero_endpoints", interpolation_zero_endpoints},
      {"sp_clips", sp_clips},
      {"monotonicity_guards", monotonicity_guards},
      {"sp_below_lifetable", sp_below_lifetable},
      {"weight_caps", weight_caps},
      {"empty_risk_sets", empty_risk_sets},
      {"excluded_replicates", excluded_replicates},
  };
}

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto log = spdlog::stderr_color_mt("netadjust");
    log->set_pattern("[%l] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("NETADJUST_LOG")) {
      level = spdlog::level::from_str(env);
    }
    log->set_level(level);
    return log;
  }();
  return *instance;
}

}  // namespace netadjust
