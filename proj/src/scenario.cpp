#include "neuroloop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace neuroloop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent noise streams derived from the run seed.
constexpr std::uint64_t kProcessStream = 1;
constexpr std::uint64_t kMeasurementStream = 2;
constexpr std::uint64_t kControlMeasurementStream = 3;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Integrates the discarded warm-up with u = 0 and p at its pre-switch level.
NeuralState warm_up(const ScenarioSpec& spec, const PatientParams& pp, NoiseStream& process) {
  NeuralState s;
  const auto n = static_cast<long long>(std::llround(spec.warmup * spec.fs));
  const double dt = 1.0 / spec.fs;
  for (long long k = 0; k < n; ++k) {
    const double t = -spec.warmup + static_cast<double>(k) * dt;
    s = step(s, 0.0, perturbation(t, spec.perturbation, process), dt, pp);
  }
  if (!s.finite()) throw NumericalDivergence("state diverged during warm-up");
  return s;
}

// RK4 with u re-evaluated from the state at every stage.
template <typename Law>
NeuralState step_feedback(const NeuralState& s, double p, double dt, const PatientParams& pp,
                          Law&& law) {
  auto axpy = [](const NeuralState& x, double h, const NeuralState& k) {
    NeuralState r;
    for (std::size_t i = 0; i < 5; ++i) {
      r.y[i] = x.y[i] + h * k.y[i];
      r.dy[i] = x.dy[i] + h * k.dy[i];
    }
    return r;
  };
  const NeuralState k1 = derivatives(s, law(s), p, pp);
  const NeuralState s2 = axpy(s, 0.5 * dt, k1);
  const NeuralState k2 = derivatives(s2, law(s2), p, pp);
  const NeuralState s3 = axpy(s, 0.5 * dt, k2);
  const NeuralState k3 = derivatives(s3, law(s3), p, pp);
  const NeuralState s4 = axpy(s, dt, k3);
  const NeuralState k4 = derivatives(s4, law(s4), p, pp);
  NeuralState r;
  for (std::size_t i = 0; i < 5; ++i) {
    r.y[i] = s.y[i] + dt / 6.0 * (k1.y[i] + 2.0 * k2.y[i] + 2.0 * k3.y[i] + k4.y[i]);
    r.dy[i] = s.dy[i] + dt / 6.0 * (k1.dy[i] + 2.0 * k2.dy[i] + 2.0 * k3.dy[i] + k4.dy[i]);
  }
  return r;
}

RunRow state_row(double t, const NeuralState& s) {
  RunRow r;
  r.t = t;
  r.y = s.y;
  r.ym = output_ym(s);
  r.ymeas = kNaN;
  r.ystar = kNaN;
  r.p = kNaN;
  r.fest = kNaN;
  r.dest = kNaN;
  r.interval = kNaN;
  return r;
}

RunRecord simulate(const ScenarioSpec& spec, bool closed) {
  spec.validate();
  const PatientParams pp = spec.effective_patient();
  NoiseStream process(spec.seed, kProcessStream);
  NoiseStream meas(spec.seed, kMeasurementStream);
  NoiseStream meas_ctrl(spec.seed, kControlMeasurementStream);

  NeuralState s = warm_up(spec, pp, process);

  std::optional<ReferenceGenerator> reference;
  std::optional<IntelligentController> controller;
  if (closed) {
    reference = spec.reference.mode == ReferenceMode::recorded
                    ? ReferenceGenerator::recorded(record_crisis_free(spec))
                    : ReferenceGenerator::constant(spec.reference.value);
    controller.emplace(spec.controller, spec.fs);
  }
  SeizureDetector detector(spec.detector, spec.fs);

  RunRecord rec;
  rec.fs = spec.fs;
  rec.switch_time = spec.perturbation.switch_time;
  const std::size_t n = spec.sample_count();
  rec.rows.reserve(n);
  const double dt = 1.0 / spec.fs;
  const double sd = spec.measurement_noise_sd;
  bool active = closed && spec.activation == Activation::immediate;
  if (active) rec.activation_time = 0.0;
  double u = 0.0;
  Reference ref;

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    RunRow row = state_row(t, s);

    // measure
    const double ym_meas = row.ym + meas.gaussian(sd);
    const double y_meas = spec.output_signal == OutputSignal::ym
                              ? ym_meas
                              : output(s, spec.output_signal) + meas_ctrl.gaussian(sd);
    // detect
    const auto det = detector.update(t, ym_meas);
    if (det.derivative) row.dest = *det.derivative;
    if (det.interval) row.interval = *det.interval;
    row.flag = det.state.flag;
    if (closed && !active && det.state.flag) {
      active = true;
      rec.activation_time = t;
    }

    const double p = perturbation(t, spec.perturbation, process);
    row.p = p;
    // control
    if (closed) {
      ref = reference->at(t);
      row.ystar = ref.y_star;
      const auto st = controller->update(t, y_meas, ref, active);
      if (spec.f_source == FSource::estimate) {
        u = st.u;
        if (st.f_est) row.fest = *st.f_est;
      } else {
        u = active ? exact_ipd_control(s, p, pp, spec.output_signal, ref, spec.controller, u)
                   : 0.0;
        row.fest = output_accel(s, u, p, pp, spec.output_signal) - spec.controller.alpha * u;
      }
      row.ymeas = y_meas;
    } else {
      row.ymeas = ym_meas;
    }
    row.u = u;
    rec.rows.push_back(row);

    // actuate + integrate
    if (closed && active && spec.f_source == FSource::exact) {
      // Continuous-time law: the hold would otherwise add a discretization
      // error comparable to the designed dynamics.
      s = step_feedback(s, p, dt, pp, [&](const NeuralState& x) {
        return exact_ipd_control(x, p, pp, spec.output_signal, ref, spec.controller, u);
      });
    } else {
      s = step(s, u, p, dt, pp);
    }
    if (!s.finite()) {
      throw NumericalDivergence("state became non-finite after t=" + std::to_string(t) + " s");
    }
  }
  rec.events = detector.events();
  return rec;
}

}  // namespace

DetectorConfig chirp_detector_defaults() {
  DetectorConfig c;
  c.derivative_window = 0.05;
  c.upper_threshold = 8.0;
  c.lower_threshold = 0.0;
  c.interval_threshold = 0.3;
  c.persistence = 1;
  c.refractory = 0.05;
  return c;
}

std::size_t ScenarioSpec::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration * fs));
}

void ScenarioSpec::validate() const {
  require(duration > 0.0 && std::isfinite(duration), "duration must be > 0");
  require(fs > 0.0 && std::isfinite(fs), "fs must be > 0");
  require(warmup >= 0.0, "warmup must be >= 0");
  require(measurement_noise_sd >= 0.0, "measurement_noise_sd must be >= 0");
  require(c_scale > 0.0, "patient.c_scale must be > 0");
  require(chirp.noise_sd >= 0.0, "chirp.noise_sd must be >= 0");
  require(chirp.window_T > 0.0, "chirp.window_T must be > 0");
  require(chirp.duration > 0.0, "chirp.duration must be > 0");
  try {
    patient.validate();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    if (msg.rfind("sigmoid.", 0) == 0) msg.erase(0, 8);
    throw std::invalid_argument("patient." + msg);
  }
  perturbation.validate();
  detector.validate();
  controller.validate();
}

double exact_ipd_control(const NeuralState& s, double p, const PatientParams& pp,
                         OutputSignal which, const Reference& ref,
                         const ControllerConfig& cfg, double u_guess) {
  const double e = output(s, which) - ref.y_star;
  const double e_dot = output_rate(s, which) - ref.dy_star;
  const double target = ref.ddy_star - cfg.K_P * e - cfg.K_D * e_dot;
  double u = std::clamp(u_guess, cfg.u_min, cfg.u_max);
  for (int it = 0; it < 60; ++it) {
    const double f = output_accel(s, u, p, pp, which) - target;
    if (std::abs(f) <= 1e-10 * std::max(1.0, std::abs(target))) break;
    const double g = input_gain(s, u, pp, which);
    if (std::abs(g) < 1e-12) break;
    const double next = std::clamp(u - f / g, cfg.u_min, cfg.u_max);
    if (next == u) break;
    u = next;
  }
  return u;
}

RunRecord run_open_loop(const ScenarioSpec& spec) { return simulate(spec, false); }

RunRecord run_closed_loop(const ScenarioSpec& spec) { return simulate(spec, true); }

RunRecord run_scenario(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::open_loop:
      return run_open_loop(spec);
    case ScenarioKind::closed_loop:
      return run_closed_loop(spec);
    case ScenarioKind::chirp: {
      DetectorConfig det = spec.detector;
      det.derivative_window = spec.chirp.window_T;
      return run_chirp_demo(spec.chirp.noise_sd, spec.chirp.window_T, spec.fs, det, spec.seed,
                            spec.chirp.duration);
    }
  }
  throw std::logic_error("unknown scenario kind");
}

RecordedTrace record_crisis_free(const ScenarioSpec& spec) {
  ScenarioSpec calm = spec;
  calm.perturbation.elevated = calm.perturbation.baseline;
  const PatientParams pp = calm.effective_patient();
  NoiseStream process(calm.seed, kProcessStream);
  NeuralState s = warm_up(calm, pp, process);

  RecordedTrace tr;
  tr.t0 = 0.0;
  tr.fs = calm.fs;
  const std::size_t n = calm.sample_count() + 1;
  tr.y.reserve(n);
  tr.dy.reserve(n);
  tr.ddy.reserve(n);
  const double dt = 1.0 / calm.fs;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double p = perturbation(t, calm.perturbation, process);
    tr.y.push_back(output(s, calm.output_signal));
    tr.dy.push_back(output_rate(s, calm.output_signal));
    tr.ddy.push_back(output_accel(s, 0.0, p, pp, calm.output_signal));
    s = step(s, 0.0, p, dt, pp);
    if (!s.finite()) throw NumericalDivergence("crisis-free recording diverged");
  }
  return tr;
}

RunRecord run_chirp_demo(double noise_sd, double window_T, double fs,
                         const DetectorConfig& detector, std::uint64_t seed,
                         double duration) {
  require(noise_sd >= 0.0, "chirp noise_sd must be >= 0");
  require(fs > 0.0, "fs must be > 0");
  require(duration > 0.0, "chirp duration must be > 0");
  DetectorConfig cfg = detector;
  cfg.derivative_window = window_T;
  SeizureDetector det(cfg, fs);
  NoiseStream noise(seed, kMeasurementStream);

  RunRecord rec;
  rec.fs = fs;
  rec.switch_time = kNaN;
  const auto n = static_cast<std::size_t>(std::llround(duration * fs));
  rec.rows.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / fs;
    RunRow row = state_row(t, NeuralState{});
    row.ym = std::sin(2.0 * std::numbers::pi * t * t) + 5.0;
    row.ymeas = row.ym + noise.gaussian(noise_sd);
    const auto out = det.update(t, row.ymeas);
    if (out.derivative) row.dest = *out.derivative;
    if (out.interval) row.interval = *out.interval;
    row.flag = out.state.flag;
    rec.rows.push_back(row);
  }
  rec.events = det.events();
  return rec;
}

Metrics compute_metrics(const RunRecord& record, const ScenarioSpec& spec) {
  Metrics m;
  m.activation_time = record.activation_time;
  if (!record.rows.empty()) {
    m.u_min_obs = std::numeric_limits<double>::infinity();
    m.u_max_obs = -std::numeric_limits<double>::infinity();
  }
  bool prev_flag = false;
  for (const auto& r : record.rows) {
    m.u_min_obs = std::min(m.u_min_obs, r.u);
    m.u_max_obs = std::max(m.u_max_obs, r.u);
    if (r.flag && !prev_flag && std::isfinite(record.switch_time)) {
      if (r.t <= record.switch_time) {
        ++m.false_positive_count;
      } else if (!m.detection_latency) {
        m.detection_latency = r.t - record.switch_time;
      }
    }
    prev_flag = r.flag;
  }

  if (record.activation_time) {
    const double from = *record.activation_time + kSettlingTime;
    double sq = 0.0, ref_sum = 0.0, ref_sq = 0.0;
    std::size_t count = 0;
    double prev_du = 0.0;
    const RunRow* prev = nullptr;
    for (const auto& r : record.rows) {
      if (r.t < from - 1e-12) continue;
      const double y = spec.output_signal == OutputSignal::ym ? r.ym : r.y[1];
      const double e = y - r.ystar;
      sq += e * e;
      ref_sum += r.ystar;
      ref_sq += r.ystar * r.ystar;
      ++count;
      if (prev) {
        const double du = r.u - prev->u;
        if (du * prev_du < 0.0) ++m.u_chatter_count;
        if (du != 0.0) prev_du = du;
      }
      prev = &r;
    }
    if (count > 0) {
      const double nn = static_cast<double>(count);
      m.tracking_rmse = std::sqrt(sq / nn);
      const double mean = ref_sum / nn;
      m.reference_sd = std::sqrt(std::max(0.0, ref_sq / nn - mean * mean));
    }
  }
  return m;
}

double peak_to_peak(const RunRecord& record, double t0, double t1) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : record.rows) {
    if (r.t < t0 || r.t > t1) continue;
    lo = std::min(lo, r.ym);
    hi = std::max(hi, r.ym);
  }
  return hi >= lo ? hi - lo : 0.0;
}

}  // namespace neuroloop
