#pragma once

// Algebraic first-derivative estimation over a trailing window.
//
// For an affine signal on [0, T] the slope equals
//     (6 / T^3) * integral_0^T (2s - T) x(s) ds,
// so the estimator is a fixed FIR filter. Applied to a smooth signal it
// returns the derivative at the window midpoint, i.e. the value reported at
// the trailing edge lags by T / 2.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace neuroloop {

/// Raised when an estimator is asked for a value before its window is full
/// or when two windows do not line up.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of sample intervals spanned by a window of length T at rate fs.
std::size_t window_intervals(double window_T, double fs);

/// Composite trapezoid weights (h/2, h, ..., h, h/2) for n intervals.
std::vector<double> trapezoid_weights(std::size_t intervals, double h);

struct DiffKernel {
  double window_T = 0.0;  // effective length: intervals / fs
  double fs = 0.0;
  std::vector<double> weights;  // oldest sample first

  std::size_t size() const { return weights.size(); }
  /// Lag of the estimate behind the window's trailing edge.
  double delay() const { return 0.5 * window_T; }
};

/// Builds the kernel for a window of round(window_T * fs) intervals.
/// Throws std::invalid_argument when the window holds fewer than 4 samples.
DiffKernel design_kernel(double window_T, double fs);

/// Fixed-capacity chronological buffer of uniformly spaced samples.
class SampleWindow {
 public:
  SampleWindow(std::size_t capacity, double fs);

  /// Appends a sample, evicting the oldest once full. Throws
  /// std::invalid_argument if t does not follow the previous sample by 1/fs.
  void push(double t, double value);
  /// Overwrites the newest value in place.
  void set_latest(double value);
  void clear();

  std::size_t capacity() const { return times_.size(); }
  std::size_t size() const { return count_; }
  bool full() const { return count_ == times_.size(); }
  double fs() const { return fs_; }

  /// i = 0 is the oldest retained sample.
  double value(std::size_t i) const { return values_[index(i)]; }
  double time(std::size_t i) const { return times_[index(i)]; }
  double latest_value() const { return value(count_ - 1); }
  double latest_time() const { return time(count_ - 1); }

 private:
  std::size_t index(std::size_t i) const { return (head_ + i) % times_.size(); }

  double fs_;
  std::vector<double> times_;
  std::vector<double> values_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

/// Dot product of weights with the window contents, oldest first.
double apply_weights(std::span<const double> weights, const SampleWindow& w);

/// Throws InsufficientData if the window is not full and
/// std::invalid_argument if its length or rate differ from the kernel's.
double estimate_derivative(const SampleWindow& w, const DiffKernel& k);

/// Owns one window; yields an estimate once the window has filled.
class StreamingDifferentiator {
 public:
  StreamingDifferentiator(double window_T, double fs);

  std::optional<double> update(double t, double value);

  const DiffKernel& kernel() const { return kernel_; }
  const SampleWindow& window() const { return window_; }

 private:
  DiffKernel kernel_;
  SampleWindow window_;
};

}  // namespace neuroloop
