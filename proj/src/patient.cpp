#include "neuroloop/patient.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace neuroloop {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be a finite positive number");
  }
}

// Sigmoid arguments of the five populations, in equation order.
struct SigmoidInputs {
  double pyramidal;     // u + y1 - y2 - y3
  double excitatory;    // u + C1 y0
  double slow;          // u + C3 y0 (shared by the y2 and y4 equations)
  double fast;          // u + C5 y0 - y4
};

SigmoidInputs sigmoid_inputs(const NeuralState& s, double u,
                             const PatientParams& pp) {
  return {u + s.y[1] - s.y[2] - s.y[3], u + pp.c(1) * s.y[0],
          u + pp.c(3) * s.y[0], u + pp.c(5) * s.y[0] - s.y[4]};
}

NeuralState axpy(const NeuralState& x, double h, const NeuralState& k) {
  NeuralState out;
  for (std::size_t i = 0; i < 5; ++i) {
    out.y[i] = x.y[i] + h * k.y[i];
    out.dy[i] = x.dy[i] + h * k.dy[i];
  }
  return out;
}

}  // namespace

void SigmoidParams::validate() const {
  require_positive(v_max, "sigmoid.v_max");
  require_positive(r, "sigmoid.r");
  if (!std::isfinite(v0)) throw std::invalid_argument("sigmoid.v0 must be finite");
}

double sigmoid(double v, const SigmoidParams& sp) {
  return sp.v_max / (1.0 + std::exp(sp.r * (sp.v0 - v)));
}

double sigmoid_slope(double v, const SigmoidParams& sp) {
  const double s = sigmoid(v, sp);
  return sp.r * s * (1.0 - s / sp.v_max);
}

void PatientParams::validate() const {
  require_positive(A, "A");
  require_positive(B, "B");
  require_positive(G, "G");
  require_positive(a, "a");
  require_positive(b, "b");
  require_positive(g, "g");
  for (int i = 1; i <= 7; ++i) {
    require_positive(c(i), ("C" + std::to_string(i)).c_str());
  }
  sigmoid.validate();
}

PatientParams make_patient_variant(const PatientParams& pp, double c_scale) {
  require_positive(c_scale, "c_scale");
  PatientParams out = pp;
  for (double& ci : out.C) ci *= c_scale;
  return out;
}

bool NeuralState::finite() const {
  for (std::size_t i = 0; i < 5; ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(dy[i])) return false;
  }
  return true;
}

NeuralState derivatives(const NeuralState& s, double u, double p,
                        const PatientParams& pp) {
  const auto in = sigmoid_inputs(s, u, pp);
  const auto& sp = pp.sigmoid;
  const double s_slow = sigmoid(in.slow, sp);

  NeuralState d;
  d.y = s.dy;
  d.dy[0] = pp.A * pp.a * sigmoid(in.pyramidal, sp) - 2.0 * pp.a * s.dy[0] -
            pp.a * pp.a * s.y[0];
  d.dy[1] = pp.A * pp.a * (p + pp.c(2) * sigmoid(in.excitatory, sp)) -
            2.0 * pp.a * s.dy[1] - pp.a * pp.a * s.y[1];
  d.dy[2] = pp.B * pp.b * pp.c(4) * s_slow - 2.0 * pp.b * s.dy[2] -
            pp.b * pp.b * s.y[2];
  d.dy[3] = pp.G * pp.g * pp.c(7) * sigmoid(in.fast, sp) -
            2.0 * pp.g * s.dy[3] - pp.g * pp.g * s.y[3];
  d.dy[4] = pp.B * pp.b * pp.c(6) * s_slow - 2.0 * pp.b * s.dy[4] -
            pp.b * pp.b * s.y[4];
  return d;
}

NeuralState step(const NeuralState& s, double u, double p, double dt,
                 const PatientParams& pp) {
  const NeuralState k1 = derivatives(s, u, p, pp);
  const NeuralState k2 = derivatives(axpy(s, 0.5 * dt, k1), u, p, pp);
  const NeuralState k3 = derivatives(axpy(s, 0.5 * dt, k2), u, p, pp);
  const NeuralState k4 = derivatives(axpy(s, dt, k3), u, p, pp);
  NeuralState out;
  for (std::size_t i = 0; i < 5; ++i) {
    out.y[i] = s.y[i] + dt / 6.0 * (k1.y[i] + 2.0 * k2.y[i] + 2.0 * k3.y[i] + k4.y[i]);
    out.dy[i] = s.dy[i] + dt / 6.0 * (k1.dy[i] + 2.0 * k2.dy[i] + 2.0 * k3.dy[i] + k4.dy[i]);
  }
  return out;
}

double output_ym(const NeuralState& s) { return s.y[1] - s.y[2] - s.y[3]; }

double output(const NeuralState& s, OutputSignal which) {
  return which == OutputSignal::y1 ? s.y[1] : output_ym(s);
}

double output_rate(const NeuralState& s, OutputSignal which) {
  return which == OutputSignal::y1 ? s.dy[1] : s.dy[1] - s.dy[2] - s.dy[3];
}

double output_accel(const NeuralState& s, double u, double p,
                    const PatientParams& pp, OutputSignal which) {
  const NeuralState d = derivatives(s, u, p, pp);
  return which == OutputSignal::y1 ? d.dy[1] : d.dy[1] - d.dy[2] - d.dy[3];
}

double input_gain(const NeuralState& s, double u, const PatientParams& pp,
                  OutputSignal which) {
  const auto in = sigmoid_inputs(s, u, pp);
  const auto& sp = pp.sigmoid;
  const double g1 = pp.A * pp.a * pp.c(2) * sigmoid_slope(in.excitatory, sp);
  if (which == OutputSignal::y1) return g1;
  const double g2 = pp.B * pp.b * pp.c(4) * sigmoid_slope(in.slow, sp);
  const double g3 = pp.G * pp.g * pp.c(7) * sigmoid_slope(in.fast, sp);
  return g1 - g2 - g3;
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double NoiseStream::gaussian(double sd) {
  if (sd == 0.0) return 0.0;
  return sd * normal_(engine_);
}

void PerturbationProfile::validate() const {
  if (!std::isfinite(baseline) || !std::isfinite(elevated)) {
    throw std::invalid_argument("perturbation levels must be finite");
  }
  if (!(switch_time >= 0.0)) {
    throw std::invalid_argument("perturbation.switch_time must be >= 0");
  }
  if (!(noise_sd >= 0.0)) {
    throw std::invalid_argument("perturbation.noise_sd must be >= 0");
  }
}

double perturbation(double t, const PerturbationProfile& profile,
                    NoiseStream& rng) {
  const double level = t <= profile.switch_time ? profile.baseline : profile.elevated;
  return level + rng.gaussian(profile.noise_sd);
}

}  // namespace neuroloop
