#include "neuroloop/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neuroloop {

void DetectorConfig::validate() const {
  if (!(upper_threshold > 0.0)) {
    throw std::invalid_argument("detector.upper_threshold must be > 0");
  }
  if (!(lower_threshold <= 0.0)) {
    throw std::invalid_argument("detector.lower_threshold must be <= 0");
  }
  if (!(interval_threshold > 0.0)) {
    throw std::invalid_argument("detector.interval_threshold must be > 0");
  }
  if (persistence < 1) throw std::invalid_argument("detector.persistence must be >= 1");
  if (!(refractory >= 0.0)) throw std::invalid_argument("detector.refractory must be >= 0");
  if (!(derivative_window > 0.0)) {
    throw std::invalid_argument("detector.derivative_window must be > 0");
  }
}

MaximumDetection detect_maximum(double d_prev, double d_curr, bool armed,
                                const DetectorConfig& cfg,
                                double time_since_last_event) {
  const bool crossed = d_prev > cfg.lower_threshold && d_curr <= cfg.lower_threshold;
  if (armed && crossed) {
    return {time_since_last_event >= cfg.refractory, false};
  }
  return {false, armed || d_curr >= cfg.upper_threshold};
}

std::optional<double> interval_update(std::span<const MaximumEvent> events) {
  if (events.size() < 2) return std::nullopt;
  return events[events.size() - 1].time - events[events.size() - 2].time;
}

SeizureState seizure_update(double interval, SeizureState state,
                            const DetectorConfig& cfg, double now) {
  const bool short_interval = interval < cfg.interval_threshold;
  const bool argues_for_change = state.flag ? !short_interval : short_interval;
  state.streak = argues_for_change ? state.streak + 1 : 0;
  if (state.streak >= cfg.persistence) {
    state.flag = !state.flag;
    state.since = now;
    state.streak = 0;
  }
  return state;
}

SeizureDetector::SeizureDetector(const DetectorConfig& cfg, double fs)
    : cfg_(cfg), fs_(fs), diff_(cfg.derivative_window, fs) {
  cfg_.validate();
}

SeizureDetector::Output SeizureDetector::update(double t, double y) {
  Output out;
  out.derivative = diff_.update(t, y);
  if (out.derivative && prev_derivative_) {
    const double d_prev = *prev_derivative_;
    const double d_curr = *out.derivative;
    const double dt = 1.0 / fs_;
    // Sub-sample crossing time, shifted back by the estimator lag.
    const double denom = d_prev - d_curr;
    const double frac = denom > 0.0 ? (d_prev - cfg_.lower_threshold) / denom : 1.0;
    const double event_time = t - dt + frac * dt - diff_.kernel().delay();
    const double since_last =
        events_.empty() ? std::numeric_limits<double>::infinity()
                        : event_time - events_.back().time;

    const auto det = detect_maximum(d_prev, d_curr, armed_, cfg_, since_last);
    armed_ = det.armed;
    if (det.event) {
      // Amplitude: nearest retained sample to the compensated event time.
      const auto& w = diff_.window();
      const double back = (w.latest_time() - event_time) * fs_;
      const auto offset = static_cast<std::size_t>(std::llround(std::max(back, 0.0)));
      const std::size_t idx = offset >= w.size() ? 0 : w.size() - 1 - offset;
      MaximumEvent ev{event_time, w.value(idx)};
      events_.push_back(ev);
      out.event = ev;
      if (const auto iv = interval_update(events_)) {
        interval_ = iv;
        state_ = seizure_update(*iv, state_, cfg_, t);
      }
    }
  }
  if (out.derivative) prev_derivative_ = out.derivative;
  out.interval = interval_;
  out.state = state_;
  return out;
}

}  // namespace neuroloop
