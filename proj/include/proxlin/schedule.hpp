#pragma once

#include <cmath>
#include <string>

#include "proxlin/error.hpp"

namespace proxlin {

enum class ScheduleKind { kConstant, kDelayedLinear };

// How the linear ramp of a delayed-linear schedule is anchored.
//   kRelative: lambda0 + slope * (t - t0)   for t > t0   (continuous at t0)
//   kAbsolute: lambda0 + slope * t          for t > t0
enum class RampOffset { kRelative, kAbsolute };

/// Inverse step-size per iteration.
struct LambdaSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double lambda0 = 1.0;
  long t0 = 0;
  double slope = 1.0;
  RampOffset offset = RampOffset::kRelative;

  static LambdaSchedule constant(double lambda) {
    LambdaSchedule s;
    s.lambda0 = lambda;
    return s;
  }

  static LambdaSchedule delayed_linear(double lambda0, long t0, double slope = 1.0,
                                       RampOffset offset = RampOffset::kRelative) {
    LambdaSchedule s;
    s.kind = ScheduleKind::kDelayedLinear;
    s.lambda0 = lambda0;
    s.t0 = t0;
    s.slope = slope;
    s.offset = offset;
    return s;
  }

  void validate() const {
    require(std::isfinite(lambda0) && lambda0 > 0.0, ErrorKind::kInvalidArgument,
            "lambda0 must be positive and finite");
    if (kind == ScheduleKind::kDelayedLinear) {
      require(t0 >= 0, ErrorKind::kInvalidArgument, "t0 must be nonnegative");
      require(std::isfinite(slope) && slope > 0.0, ErrorKind::kInvalidArgument,
              "slope must be positive");
    }
  }

  double value(long t) const {
    if (kind == ScheduleKind::kConstant || t <= t0) return lambda0;
    const double ramp = offset == RampOffset::kRelative ? double(t - t0) : double(t);
    return lambda0 + slope * ramp;
  }

  bool operator==(const LambdaSchedule&) const = default;
};

inline std::string to_string(ScheduleKind k) {
  return k == ScheduleKind::kConstant ? "constant" : "delayed-linear";
}

inline std::string to_string(RampOffset o) {
  return o == RampOffset::kRelative ? "relative" : "absolute";
}

}  // namespace proxlin
