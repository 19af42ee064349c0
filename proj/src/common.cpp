#include "surfipp/common.hpp"
#include "surfipp/log.hpp"

#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace surfipp {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r > std::numbers::pi) r -= two_pi;
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>("surfipp",
                                              std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("SURFIPP_LOG_LEVEL")) {
      level = spdlog::level::from_str(env);
    }
    l->set_level(level);
    return l;
  }();
  return *logger;
}

}  // namespace surfipp
