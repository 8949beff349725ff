#pragma once

#include <spdlog/spdlog.h>

namespace netadjust {

// Shared logger; level comes from NETADJUST_LOG (trace, debug, info, warn,
// error, off). Defaults to warn.
spdlog::logger& logger();

}  // namespace netadjust
