#pragma once

// Virtual patient: the stimulated Wendling neural-mass model.
//
// Five second-order post-synaptic potential equations, written as a
// ten-dimensional first-order system. The stimulation u is added inside every
// sigmoid argument; the excitatory input p drives the excitatory-feedback
// population only.

#include <array>
#include <cstdint>
#include <random>

namespace neuroloop {

struct SigmoidParams {
  double v_max = 5.0;  // s^-1
  double v0 = 5.0;     // mV
  double r = 0.56;     // mV^-1

  void validate() const;
};

/// Firing rate v_max / (1 + exp(r (v0 - v))).
double sigmoid(double v, const SigmoidParams& sp);

/// dS/dv, used for input-gain computations.
double sigmoid_slope(double v, const SigmoidParams& sp);

struct PatientParams {
  double A = 3.25;   // excitatory PSP gain, mV
  double B = 22.0;   // slow inhibitory PSP gain, mV
  double G = 20.0;   // fast inhibitory PSP gain, mV
  double a = 100.0;  // s^-1
  double b = 30.0;   // s^-1
  double g = 350.0;  // s^-1
  /// C1..C7 stored at indices 0..6.
  std::array<double, 7> C = nominal_connectivity(135.0);
  SigmoidParams sigmoid;

  /// C2 = 0.8 C1, C3 = C4 = 0.25 C1, C5 = 0.3 C1, C6 = 0.1 C1, C7 = C2.
  static constexpr std::array<double, 7> nominal_connectivity(double c1) {
    return {c1, 0.8 * c1, 0.25 * c1, 0.25 * c1, 0.3 * c1, 0.1 * c1, 0.8 * c1};
  }

  double c(int index) const { return C.at(static_cast<std::size_t>(index - 1)); }

  /// Throws std::invalid_argument unless every field is strictly positive.
  void validate() const;
};

/// Scales C1..C7 by c_scale; all other fields are copied.
PatientParams make_patient_variant(const PatientParams& pp, double c_scale);

/// Potentials y0..y4 (mV) and their time derivatives (mV/s). The same layout
/// is used for the right-hand side returned by derivatives().
struct NeuralState {
  std::array<double, 5> y{};
  std::array<double, 5> dy{};

  bool finite() const;
  friend bool operator==(const NeuralState&, const NeuralState&) = default;
};

/// Right-hand side of the first-order system: result.y holds dy/dt and
/// result.dy holds d2y/dt2.
NeuralState derivatives(const NeuralState& s, double u, double p,
                        const PatientParams& pp);

/// One classical RK4 step with u and p held over [t, t + dt].
NeuralState step(const NeuralState& s, double u, double p, double dt,
                 const PatientParams& pp);

/// y1 - y2 - y3.
double output_ym(const NeuralState& s);

enum class OutputSignal { y1, ym };

double output(const NeuralState& s, OutputSignal which);
double output_rate(const NeuralState& s, OutputSignal which);
/// Second time derivative of the chosen output under inputs (u, p).
double output_accel(const NeuralState& s, double u, double p,
                    const PatientParams& pp, OutputSignal which);
/// Partial derivative of output_accel with respect to u.
double input_gain(const NeuralState& s, double u, const PatientParams& pp,
                  OutputSignal which);

/// Gaussian sample source with a private engine. Streams built from the same
/// (seed, stream) pair produce identical sequences.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream);

  /// One N(0, sd^2) draw; returns 0 without consuming the engine when sd == 0.
  double gaussian(double sd);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct PerturbationProfile {
  double baseline = 200.0;   // pulse density before the switch, s^-1
  double elevated = 800.0;   // after the switch, s^-1
  double switch_time = 2.0;  // s
  double noise_sd = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Level for time t (baseline while t <= switch_time) plus one Gaussian draw.
/// Callers hold the result for one sample period.
double perturbation(double t, const PerturbationProfile& profile,
                    NoiseStream& rng);

}  // namespace neuroloop
