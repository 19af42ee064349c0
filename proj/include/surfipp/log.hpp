#pragma once

#include <spdlog/logger.h>

namespace surfipp {

/// Shared stderr logger. Level is read once from SURFIPP_LOG_LEVEL
/// (trace, debug, info, warn, error, off); default is warn.
spdlog::logger& log();

}  // namespace surfipp
