#pragma once

// Scenario orchestration: patient -> detector -> controller, one sample at a
// time. Per sample the order is measure, detect, control, actuate, integrate,
// so a control value computed at t_k acts on [t_k, t_k+1).

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "neuroloop/detector.hpp"
#include "neuroloop/mfc.hpp"
#include "neuroloop/patient.hpp"

namespace neuroloop {

/// Raised when the simulated state stops being finite.
class NumericalDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { open_loop, closed_loop, chirp };
enum class ReferenceMode { constant, recorded };
enum class Activation { on_detection, immediate };
/// Where the controller's F comes from. `exact` reads the true F from the
/// simulator and exists to check the closed-loop error dynamics.
enum class FSource { estimate, exact };

struct ReferenceConfig {
  ReferenceMode mode = ReferenceMode::constant;
  double value = 40.0;
};

struct ChirpSpec {
  double noise_sd = 0.1;
  double window_T = 0.05;
  double duration = 5.0;
};

/// Detector defaults for the chirp demo.
DetectorConfig chirp_detector_defaults();

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::open_loop;
  PatientParams patient;
  double c_scale = 1.0;
  PerturbationProfile perturbation;
  DetectorConfig detector;
  ControllerConfig controller;
  ReferenceConfig reference;
  Activation activation = Activation::on_detection;
  FSource f_source = FSource::estimate;
  OutputSignal output_signal = OutputSignal::y1;
  double duration = 8.0;  // recorded span, s
  double fs = 512.0;
  double warmup = 2.0;  // discarded before t = 0, s
  double measurement_noise_sd = 0.0;
  std::uint64_t seed = 0;
  ChirpSpec chirp;

  PatientParams effective_patient() const { return make_patient_variant(patient, c_scale); }
  std::size_t sample_count() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct RunRow {
  double t = 0.0;
  std::array<double, 5> y{};
  double ym = 0.0;
  double ymeas = 0.0;
  double ystar = 0.0;
  double u = 0.0;
  double p = 0.0;
  double fest = 0.0;
  double dest = 0.0;
  double interval = 0.0;
  bool flag = false;
};

struct RunRecord {
  double fs = 0.0;
  double switch_time = 0.0;
  std::vector<RunRow> rows;
  std::vector<MaximumEvent> events;
  std::optional<double> activation_time;
};

struct Metrics {
  std::optional<double> tracking_rmse;
  double u_min_obs = 0.0;
  double u_max_obs = 0.0;
  std::optional<double> detection_latency;
  int false_positive_count = 0;
  std::optional<double> activation_time;
  /// Spread of the reference over the RMSE window.
  std::optional<double> reference_sd;
  /// Sign changes of successive control increments over the RMSE window.
  int u_chatter_count = 0;
};

/// Settling time excluded from the tracking RMSE after activation, s.
inline constexpr double kSettlingTime = 0.5;

RunRecord run_open_loop(const ScenarioSpec& spec);
RunRecord run_closed_loop(const ScenarioSpec& spec);
RunRecord run_chirp_demo(double noise_sd, double window_T, double fs,
                         const DetectorConfig& detector = chirp_detector_defaults(),
                         std::uint64_t seed = 0, double duration = 5.0);
/// Dispatches on spec.kind.
RunRecord run_scenario(const ScenarioSpec& spec);

/// Crisis-free counterfactual of the spec: same patient, seed and warm-up,
/// p held at baseline, u = 0. Covers [0, duration] inclusive.
RecordedTrace record_crisis_free(const ScenarioSpec& spec);

Metrics compute_metrics(const RunRecord& record, const ScenarioSpec& spec);

/// Control that makes the chosen output's acceleration equal
/// y*'' - K_P e - K_D e' exactly, given the true state; equivalently the iPD
/// law with the true F = y'' - alpha u. Newton iteration from u_guess.
double exact_ipd_control(const NeuralState& s, double p, const PatientParams& pp,
                         OutputSignal which, const Reference& ref,
                         const ControllerConfig& cfg, double u_guess);

/// max - min of ym over rows with t in [t0, t1].
double peak_to_peak(const RunRecord& record, double t0, double t1);

}  // namespace neuroloop
