#pragma once

// Model-free control around the second-order ultra-local model
//     y'' = F + alpha u.
//
// F is re-estimated every sample from short windows of y and u; the
// intelligent PD law then cancels it and imposes e'' + K_D e' + K_P e = 0.

#include <optional>
#include <stdexcept>
#include <vector>

#include "neuroloop/diffest.hpp"

namespace neuroloop {

enum class ControlMode { iPD, iPD2 };

struct ControllerConfig {
  double alpha = 1e4;
  double K_P = 100.0;  // s^-2
  double K_D = 20.0;   // s^-1
  double tau = 0.01;   // F-estimation window, s
  ControlMode mode = ControlMode::iPD;
  double u_min = -50.0;
  double u_max = 50.0;
  /// Window of the differentiator producing e' in iPD mode, s.
  double derivative_window = 0.01;

  /// Throws std::invalid_argument on alpha == 0, tau <= 0, u_min > u_max, or
  /// gains that are not admissible.
  void validate() const;
};

struct Reference {
  double y_star = 0.0;
  double dy_star = 0.0;
  double ddy_star = 0.0;
};

/// True iff s^2 + K_D s + K_P is Hurwitz.
bool gains_admissible(double K_P, double K_D);

/// Quadrature weights for both integrals of the F estimate. Weights depend
/// only on (tau, fs).
struct FEstimatorKernel {
  double tau = 0.0;  // effective window, intervals / fs
  double fs = 0.0;
  /// (60 / tau^5) (tau^2 + 6 s^2 - 6 tau s); exact on quadratics.
  std::vector<double> output_weights;
  /// (30 / tau^5) (tau - s)^2 s^2; sums to one.
  std::vector<double> input_weights;

  std::size_t size() const { return output_weights.size(); }
};

FEstimatorKernel design_f_estimator(double tau, double fs);

/// F over the window ending at the windows' newest sample. The newest and
/// oldest input samples carry zero weight. Throws InsufficientData unless
/// both windows are full, match the kernel, and share timestamps.
double f_estimate(const SampleWindow& y_window, const SampleWindow& u_window,
                  const FEstimatorKernel& kernel, double alpha);

double saturate(double u, const ControllerConfig& cfg);

/// u = -(F_est - y*'' + K_P e + K_D e') / alpha, saturated.
double ipd_control(double F_est, const Reference& ref, double e, double e_dot,
                   const ControllerConfig& cfg);

/// Derivative-free law on the transformed output Y = y + K_D * integral(y):
/// u = -(Fcal_est - y*'' - K_D y*' + K_P e) / alpha, saturated.
double ipd2_control(double Fcal_est, const Reference& ref, double e,
                    const ControllerConfig& cfg);

/// Running Y(t) = y(t) + K_D * integral_c^t y, trapezoid rule; c is the time
/// of the first update.
class RiachyIntegrator {
 public:
  explicit RiachyIntegrator(double K_D) : K_D_(K_D) {}

  double update(double t, double y);
  double integral() const { return integral_; }

 private:
  double K_D_;
  double integral_ = 0.0;
  std::optional<double> last_t_;
  double last_y_ = 0.0;
};

/// Raised when a recorded reference is queried outside its span.
class ExhaustedReference : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Uniformly sampled trajectory with its first two derivatives.
struct RecordedTrace {
  double t0 = 0.0;
  double fs = 0.0;
  std::vector<double> y;
  std::vector<double> dy;
  std::vector<double> ddy;
};

class ReferenceGenerator {
 public:
  static ReferenceGenerator constant(double value);
  static ReferenceGenerator recorded(RecordedTrace trace);

  /// Recorded mode returns the stored sample nearest to t.
  Reference at(double t) const;
  bool is_recorded() const { return trace_.has_value(); }

 private:
  double value_ = 0.0;
  std::optional<RecordedTrace> trace_;
};

/// Sample-by-sample iPD / iPD2 controller. Histories are kept whether or not
/// the controller is active so that F is available as soon as it engages.
class IntelligentController {
 public:
  struct Step {
    double u = 0.0;
    std::optional<double> f_est;
  };

  IntelligentController(const ControllerConfig& cfg, double fs);

  /// Consumes the measurement taken at time t and returns the control to
  /// hold over [t, t + 1/fs). While inactive the returned u is 0.
  Step update(double t, double y_meas, const Reference& ref, bool active);

  const ControllerConfig& config() const { return cfg_; }
  const FEstimatorKernel& kernel() const { return kernel_; }

 private:
  ControllerConfig cfg_;
  FEstimatorKernel kernel_;
  SampleWindow y_window_;
  SampleWindow u_window_;
  StreamingDifferentiator error_diff_;
  RiachyIntegrator riachy_;
  double last_u_ = 0.0;
};

}  // namespace neuroloop
