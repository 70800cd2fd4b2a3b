#include "neuroloop/mfc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace neuroloop {

void ControllerConfig::validate() const {
  if (alpha == 0.0 || !std::isfinite(alpha)) {
    throw std::invalid_argument("controller.alpha must be finite and non-zero");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("controller.tau must be > 0");
  if (!(derivative_window > 0.0)) {
    throw std::invalid_argument("controller.derivative_window must be > 0");
  }
  if (!(u_min <= u_max)) throw std::invalid_argument("controller.u_min must be <= u_max");
  if (!gains_admissible(K_P, K_D)) {
    throw std::invalid_argument("inadmissible gains: s^2 + " + std::to_string(K_D) + " s + " +
                                std::to_string(K_P) + " is not Hurwitz");
  }
}

bool gains_admissible(double K_P, double K_D) {
  return K_P > 0.0 && K_D > 0.0 && std::isfinite(K_P) && std::isfinite(K_D);
}

FEstimatorKernel design_f_estimator(double tau, double fs) {
  const std::size_t n = window_intervals(tau, fs);
  if (n < 2) {
    throw std::invalid_argument("F-estimation window of " + std::to_string(tau) +
                                " s spans fewer than 2 intervals");
  }
  FEstimatorKernel k;
  k.fs = fs;
  k.tau = static_cast<double>(n) / fs;
  const double h = 1.0 / fs;
  const double T = k.tau;
  const double T5 = std::pow(T, 5);

  k.output_weights = trapezoid_weights(n, h);
  k.input_weights = trapezoid_weights(n, h);
  for (std::size_t j = 0; j <= n; ++j) {
    const double s = static_cast<double>(j) * h;
    k.output_weights[j] *= 60.0 / T5 * (T * T + 6.0 * s * s - 6.0 * T * s);
    k.input_weights[j] *= 30.0 / T5 * (T - s) * (T - s) * s * s;
  }

  // Minimum-norm correction restoring the discrete moments
  // sum w = 0, sum w x = 0, sum w x^2 = 2 / T^2 with x = s / T,
  // i.e. exactness on quadratics.
  const auto m = static_cast<Eigen::Index>(n + 1);
  Eigen::MatrixXd V(m, 3);
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(k.output_weights.data(), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(n);
    V(j, 0) = 1.0;
    V(j, 1) = x;
    V(j, 2) = x * x;
  }
  const Eigen::Vector3d target(0.0, 0.0, 2.0 / (T * T));
  const Eigen::Vector3d residual = target - V.transpose() * w;
  w += V * (V.transpose() * V).ldlt().solve(residual);
  std::copy(w.data(), w.data() + m, k.output_weights.begin());

  const double mass = std::accumulate(k.input_weights.begin(), k.input_weights.end(), 0.0);
  for (double& wi : k.input_weights) wi /= mass;
  return k;
}

double f_estimate(const SampleWindow& y_window, const SampleWindow& u_window,
                  const FEstimatorKernel& kernel, double alpha) {
  if (!y_window.full() || !u_window.full()) {
    throw InsufficientData("F estimate needs full output and input windows");
  }
  if (y_window.capacity() != kernel.size() || u_window.capacity() != kernel.size()) {
    throw InsufficientData("F estimate windows do not span the kernel length");
  }
  if (std::abs(y_window.time(0) - u_window.time(0)) > 1e-9 ||
      std::abs(y_window.latest_time() - u_window.latest_time()) > 1e-9) {
    throw InsufficientData("F estimate windows are not aligned");
  }
  return apply_weights(kernel.output_weights, y_window) -
         alpha * apply_weights(kernel.input_weights, u_window);
}

double saturate(double u, const ControllerConfig& cfg) {
  return std::clamp(u, cfg.u_min, cfg.u_max);
}

double ipd_control(double F_est, const Reference& ref, double e, double e_dot,
                   const ControllerConfig& cfg) {
  const double u = -(F_est - ref.ddy_star + cfg.K_P * e + cfg.K_D * e_dot) / cfg.alpha;
  return saturate(u, cfg);
}

double ipd2_control(double Fcal_est, const Reference& ref, double e,
                    const ControllerConfig& cfg) {
  const double u =
      -(Fcal_est - ref.ddy_star - cfg.K_D * ref.dy_star + cfg.K_P * e) / cfg.alpha;
  return saturate(u, cfg);
}

double RiachyIntegrator::update(double t, double y) {
  if (last_t_) integral_ += 0.5 * (t - *last_t_) * (y + last_y_);
  last_t_ = t;
  last_y_ = y;
  return y + K_D_ * integral_;
}

ReferenceGenerator ReferenceGenerator::constant(double value) {
  ReferenceGenerator g;
  g.value_ = value;
  return g;
}

ReferenceGenerator ReferenceGenerator::recorded(RecordedTrace trace) {
  if (trace.y.empty() || trace.dy.size() != trace.y.size() ||
      trace.ddy.size() != trace.y.size() || !(trace.fs > 0.0)) {
    throw std::invalid_argument("recorded reference needs equal-length y, dy, ddy and fs > 0");
  }
  ReferenceGenerator g;
  g.trace_ = std::move(trace);
  return g;
}

Reference ReferenceGenerator::at(double t) const {
  if (!trace_) return {value_, 0.0, 0.0};
  const double pos = (t - trace_->t0) * trace_->fs;
  const double last = static_cast<double>(trace_->y.size() - 1);
  if (pos < -0.5 || pos > last + 0.5) {
    throw ExhaustedReference("recorded reference has no sample at t=" + std::to_string(t));
  }
  const auto i = static_cast<std::size_t>(std::clamp(std::llround(pos), 0LL,
                                                     static_cast<long long>(last)));
  return {trace_->y[i], trace_->dy[i], trace_->ddy[i]};
}

IntelligentController::IntelligentController(const ControllerConfig& cfg, double fs)
    : cfg_(cfg),
      kernel_(design_f_estimator(cfg.tau, fs)),
      y_window_(kernel_.size(), fs),
      u_window_(kernel_.size(), fs),
      error_diff_(cfg.derivative_window, fs),
      riachy_(cfg.K_D) {
  cfg_.validate();
}

IntelligentController::Step IntelligentController::update(double t, double y_meas,
                                                          const Reference& ref,
                                                          bool active) {
  const double y_est =
      cfg_.mode == ControlMode::iPD2 ? riachy_.update(t, y_meas) : y_meas;
  y_window_.push(t, y_est);
  u_window_.push(t, last_u_);  // newest input weight is zero; overwritten below

  const double e = y_meas - ref.y_star;
  const auto e_dot = error_diff_.update(t, e);

  Step out;
  if (y_window_.full()) out.f_est = f_estimate(y_window_, u_window_, kernel_, cfg_.alpha);
  if (active && out.f_est) {
    out.u = cfg_.mode == ControlMode::iPD2
                ? ipd2_control(*out.f_est, ref, e, cfg_)
                : ipd_control(*out.f_est, ref, e, e_dot.value_or(0.0), cfg_);
  }
  u_window_.set_latest(out.u);
  last_u_ = out.u;
  return out;
}

}  // namespace neuroloop
