#include "neuroloop/diffest.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace neuroloop {

namespace {
constexpr double kSpacingTolerance = 1e-9;
}

std::size_t window_intervals(double window_T, double fs) {
  if (!(window_T > 0.0) || !(fs > 0.0) || !std::isfinite(window_T * fs)) {
    throw std::invalid_argument("window length and sampling rate must be positive");
  }
  return static_cast<std::size_t>(std::llround(window_T * fs));
}

std::vector<double> trapezoid_weights(std::size_t intervals, double h) {
  std::vector<double> w(intervals + 1, h);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

DiffKernel design_kernel(double window_T, double fs) {
  const std::size_t n = window_intervals(window_T, fs);
  if (n + 1 < 4) {
    throw std::invalid_argument("differentiator window of " + std::to_string(window_T) +
                                " s holds fewer than 4 samples at " +
                                std::to_string(fs) + " Hz");
  }
  DiffKernel k;
  k.fs = fs;
  k.window_T = static_cast<double>(n) / fs;
  const double h = 1.0 / fs;
  const double T = k.window_T;
  k.weights = trapezoid_weights(n, h);
  for (std::size_t j = 0; j <= n; ++j) {
    const double s = static_cast<double>(j) * h;
    k.weights[j] *= 6.0 / (T * T * T) * (2.0 * s - T);
  }
  // Moment correction: zero sum exactly, then unit first moment.
  const double mean = std::accumulate(k.weights.begin(), k.weights.end(), 0.0) /
                      static_cast<double>(k.weights.size());
  double first = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    k.weights[j] -= mean;
    first += k.weights[j] * static_cast<double>(j) * h;
  }
  for (double& w : k.weights) w /= first;
  return k;
}

SampleWindow::SampleWindow(std::size_t capacity, double fs)
    : fs_(fs), times_(capacity), values_(capacity) {
  if (capacity == 0) throw std::invalid_argument("window capacity must be positive");
  if (!(fs > 0.0)) throw std::invalid_argument("sampling rate must be positive");
}

void SampleWindow::push(double t, double value) {
  if (count_ > 0) {
    const double spacing = t - latest_time();
    if (std::abs(spacing - 1.0 / fs_) > kSpacingTolerance) {
      throw std::invalid_argument("sample at t=" + std::to_string(t) +
                                  " breaks uniform spacing 1/fs");
    }
  }
  if (full()) {
    times_[head_] = t;
    values_[head_] = value;
    head_ = (head_ + 1) % times_.size();
  } else {
    times_[index(count_)] = t;
    values_[index(count_)] = value;
    ++count_;
  }
}

void SampleWindow::set_latest(double value) {
  if (count_ == 0) throw InsufficientData("window is empty");
  values_[index(count_ - 1)] = value;
}

void SampleWindow::clear() {
  head_ = 0;
  count_ = 0;
}

double apply_weights(std::span<const double> weights, const SampleWindow& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * w.value(i);
  return acc;
}

double estimate_derivative(const SampleWindow& w, const DiffKernel& k) {
  if (w.capacity() != k.size() || std::abs(w.fs() - k.fs) > 1e-12 * k.fs) {
    throw std::invalid_argument("window does not match differentiator kernel");
  }
  if (!w.full()) {
    throw InsufficientData("differentiator window holds " + std::to_string(w.size()) +
                           " of " + std::to_string(k.size()) + " samples");
  }
  return apply_weights(k.weights, w);
}

StreamingDifferentiator::StreamingDifferentiator(double window_T, double fs)
    : kernel_(design_kernel(window_T, fs)), window_(kernel_.size(), fs) {}

std::optional<double> StreamingDifferentiator::update(double t, double value) {
  window_.push(t, value);
  if (!window_.full()) return std::nullopt;
  return apply_weights(kernel_.weights, window_);
}

}  // namespace neuroloop
