#pragma once

// Seizure detection from inter-maxima timing.
//
// Maxima of the recorded signal are zero crossings of its derivative. A
// two-level hysteresis picks out large maxima: the detector arms when the
// derivative estimate rises above upper_threshold and fires when it next
// falls through lower_threshold. Seizures are flagged when several
// consecutive inter-maximum intervals are shorter than interval_threshold.

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "neuroloop/diffest.hpp"

namespace neuroloop {

struct DetectorConfig {
  double derivative_window = 0.05;  // s
  double upper_threshold = 100.0;   // arm level, signal units / s
  double lower_threshold = 0.0;     // fire level
  double interval_threshold = 0.3;  // s
  int persistence = 3;
  double refractory = 0.01;  // s

  /// Throws std::invalid_argument on upper <= 0 < lower, persistence < 1,
  /// or a negative refractory period.
  void validate() const;
};

struct MaximumEvent {
  double time = 0.0;
  double amplitude = 0.0;
};

struct SeizureState {
  bool flag = false;
  double since = 0.0;
  int streak = 0;  // consecutive intervals arguing for a flag change
};

struct MaximumDetection {
  bool event = false;
  bool armed = false;
};

/// One transition of the arm/fire machine. An event requires the machine to
/// be armed, d_prev > lower_threshold and d_curr <= lower_threshold. Firing
/// disarms; a crossing inside the refractory period is consumed without an
/// event.
MaximumDetection detect_maximum(
    double d_prev, double d_curr, bool armed, const DetectorConfig& cfg,
    double time_since_last_event = std::numeric_limits<double>::infinity());

/// Spacing of the two most recent events, or nullopt with fewer than two.
std::optional<double> interval_update(std::span<const MaximumEvent> events);

/// Symmetric hysteresis: the flag rises after cfg.persistence consecutive
/// intervals below the threshold and clears after as many at or above it.
SeizureState seizure_update(double interval, SeizureState state,
                            const DetectorConfig& cfg, double now);

/// Per-sample detector over one signal stream.
class SeizureDetector {
 public:
  struct Output {
    std::optional<double> derivative;
    std::optional<MaximumEvent> event;
    std::optional<double> interval;  // latest known interval
    SeizureState state;
  };

  SeizureDetector(const DetectorConfig& cfg, double fs);

  Output update(double t, double y);

  const std::vector<MaximumEvent>& events() const { return events_; }
  const SeizureState& state() const { return state_; }
  const DiffKernel& kernel() const { return diff_.kernel(); }

 private:
  DetectorConfig cfg_;
  double fs_;
  StreamingDifferentiator diff_;
  std::optional<double> prev_derivative_;
  bool armed_ = false;
  std::vector<MaximumEvent> events_;
  std::optional<double> interval_;
  SeizureState state_;
};

}  // namespace neuroloop
