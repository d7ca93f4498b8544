#include "server.hpp"

namespace trackersync {

namespace {

// Stride in metres; only meaningful when steps > 0.
bool stride_out_of_bounds(const FraudRules& rules, std::uint32_t steps, std::uint32_t distance_mm) {
  if (steps == 0) return false;
  const double stride_m = static_cast<double>(distance_mm) / steps / 1000.0;
  return stride_m < rules.min_stride_m || stride_m > rules.max_stride_m;
}

}  // namespace

const char* verdict_name(FraudVerdict verdict) {
  switch (verdict) {
    case FraudVerdict::Accept: return "accept";
    case FraudVerdict::Flag: return "flag";
    case FraudVerdict::Reject: return "reject";
  }
  return "?";
}

FraudResult fraud_check(const FraudRules& rules, const Megadump& dump) {
  if (dump.overall.steps > rules.max_daily_steps) {
    return {FraudVerdict::Reject, std::to_string(dump.overall.steps) + " steps in one day exceeds " +
                                      std::to_string(rules.max_daily_steps)};
  }
  for (const auto& day : dump.daily) {
    if (day.steps > rules.max_daily_steps) {
      return {FraudVerdict::Reject, "daily record with " + std::to_string(day.steps) + " steps"};
    }
  }
  const std::uint64_t slot_limit =
      static_cast<std::uint64_t>(rules.max_steps_per_minute) * dump.per_minute.period_code;
  for (std::size_t i = 0; i < dump.per_minute.slots.size(); ++i) {
    if (dump.per_minute.slots[i] > slot_limit) {
      return {FraudVerdict::Reject, "per-minute slot " + std::to_string(i) + " exceeds " +
                                        std::to_string(slot_limit) + " steps"};
    }
  }
  if (stride_out_of_bounds(rules, dump.overall.steps, dump.overall.distance_mm)) {
    return {FraudVerdict::Flag, "stride outside plausible bounds"};
  }
  for (const auto& day : dump.daily) {
    if (stride_out_of_bounds(rules, day.steps, day.distance_mm)) {
      return {FraudVerdict::Flag, "daily record stride outside plausible bounds"};
    }
  }
  return {FraudVerdict::Accept, {}};
}

}  // namespace trackersync
