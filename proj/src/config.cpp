#include "neuroloop/config.hpp"

#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

namespace neuroloop {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* find(const std::string& k) {
    seen_.insert(k);
    const auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  void number(const std::string& k, double& dst) {
    if (const json* v = find(k)) {
      if (!v->is_number()) throw ConfigError(key(k), "expected a number");
      dst = v->get<double>();
    }
  }

  void integer(const std::string& k, int& dst) {
    if (const json* v = find(k)) {
      if (!v->is_number_integer()) throw ConfigError(key(k), "expected an integer");
      dst = v->get<int>();
    }
  }

  void seed(const std::string& k, std::uint64_t& dst) {
    if (const json* v = find(k)) {
      if (!v->is_number_unsigned()) throw ConfigError(key(k), "expected a non-negative integer");
      dst = v->get<std::uint64_t>();
    }
  }

  template <typename E>
  void choice(const std::string& k, E& dst, const std::map<std::string, E>& options) {
    if (const json* v = find(k)) {
      if (!v->is_string()) throw ConfigError(key(k), "expected a string");
      const auto it = options.find(v->get<std::string>());
      if (it == options.end()) {
        std::string allowed;
        for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : ", ") + name;
        throw ConfigError(key(k), "unknown value \"" + v->get<std::string>() +
                                      "\" (allowed: " + allowed + ")");
      }
      dst = it->second;
    }
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(key(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_patient(const json& j, ScenarioSpec& spec) {
  ObjectReader r(j, "patient");
  PatientParams& pp = spec.patient;
  r.number("A", pp.A);
  r.number("B", pp.B);
  r.number("G", pp.G);
  r.number("a", pp.a);
  r.number("b", pp.b);
  r.number("g", pp.g);
  // C2..C7 follow the nominal ratios of whatever C1 is configured.
  double c1 = pp.C[0];
  r.number("C1", c1);
  pp.C = PatientParams::nominal_connectivity(c1);
  for (int i = 2; i <= 7; ++i) {
    r.number("C" + std::to_string(i), pp.C[static_cast<std::size_t>(i - 1)]);
  }
  r.number("v_max", pp.sigmoid.v_max);
  r.number("v0", pp.sigmoid.v0);
  r.number("r", pp.sigmoid.r);
  r.number("c_scale", spec.c_scale);
  r.finish();
}

void read_perturbation(const json& j, PerturbationProfile& p) {
  ObjectReader r(j, "perturbation");
  r.number("baseline", p.baseline);
  r.number("elevated", p.elevated);
  r.number("switch_time", p.switch_time);
  r.number("noise_sd", p.noise_sd);
  r.finish();
}

void read_detector(const json& j, DetectorConfig& d) {
  ObjectReader r(j, "detector");
  r.number("derivative_window", d.derivative_window);
  r.number("upper_threshold", d.upper_threshold);
  r.number("lower_threshold", d.lower_threshold);
  r.number("interval_threshold", d.interval_threshold);
  r.integer("persistence", d.persistence);
  r.number("refractory", d.refractory);
  r.finish();
}

void read_controller(const json& j, ScenarioSpec& spec) {
  ObjectReader r(j, "controller");
  ControllerConfig& c = spec.controller;
  r.number("alpha", c.alpha);
  r.number("K_P", c.K_P);
  r.number("K_D", c.K_D);
  r.number("tau", c.tau);
  r.choice<ControlMode>("mode", c.mode, {{"iPD", ControlMode::iPD}, {"iPD2", ControlMode::iPD2}});
  r.number("u_min", c.u_min);
  r.number("u_max", c.u_max);
  r.number("derivative_window", c.derivative_window);
  if (const json* ref = r.find("reference")) {
    ObjectReader rr(*ref, "controller.reference");
    rr.choice<ReferenceMode>("mode", spec.reference.mode,
                             {{"constant", ReferenceMode::constant},
                              {"recorded", ReferenceMode::recorded}});
    rr.number("value", spec.reference.value);
    rr.finish();
  }
  r.choice<FSource>("f_source", spec.f_source,
                    {{"estimate", FSource::estimate}, {"exact", FSource::exact}});
  r.choice<Activation>("activation", spec.activation,
                       {{"on_detection", Activation::on_detection},
                        {"immediate", Activation::immediate}});
  r.finish();
  if (!gains_admissible(c.K_P, c.K_D)) {
    throw ConfigError(r.key(c.K_P > 0.0 ? "K_D" : "K_P"),
                      "inadmissible gains: K_P and K_D must both be > 0");
  }
}

void read_chirp(const json& j, ChirpSpec& c) {
  ObjectReader r(j, "chirp");
  r.number("noise_sd", c.noise_sd);
  r.number("window_T", c.window_T);
  r.number("duration", c.duration);
  r.finish();
}

// validate() messages read "<key path> must ...".
std::string path_of(const std::string& message) {
  const auto space = message.find(' ');
  if (space == std::string::npos || message.compare(space, 6, " must ") != 0) return "";
  return message.substr(0, space);
}

ScenarioSpec parse_json(const json& doc) {
  ObjectReader r(doc, "");
  ScenarioSpec spec;

  if (!r.has("scenario")) throw ConfigError("scenario", "missing required field");
  if (!r.has("duration")) throw ConfigError("duration", "missing required field");
  r.choice<ScenarioKind>("scenario", spec.kind,
                         {{"open_loop", ScenarioKind::open_loop},
                          {"closed_loop", ScenarioKind::closed_loop},
                          {"chirp", ScenarioKind::chirp}});
  r.number("duration", spec.duration);
  if (spec.kind == ScenarioKind::chirp) spec.detector = chirp_detector_defaults();
  if (const json* v = r.find("name"); v && !v->is_string()) {  // free-form label
    throw ConfigError("name", "expected a string");
  }
  r.number("fs", spec.fs);
  r.number("warmup", spec.warmup);
  r.number("measurement_noise_sd", spec.measurement_noise_sd);
  r.seed("seed", spec.seed);
  r.choice<OutputSignal>("output_signal", spec.output_signal,
                         {{"y1", OutputSignal::y1}, {"ym", OutputSignal::ym}});

  if (const json* v = r.find("patient")) read_patient(*v, spec);
  if (const json* v = r.find("perturbation")) read_perturbation(*v, spec.perturbation);
  if (const json* v = r.find("detector")) read_detector(*v, spec.detector);
  if (const json* v = r.find("controller")) read_controller(*v, spec);
  if (const json* v = r.find("chirp")) read_chirp(*v, spec.chirp);
  r.finish();

  spec.perturbation.seed = spec.seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path_of(e.what()), e.what());
  }
  return spec;
}

}  // namespace

ScenarioSpec parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_json(doc);
}

ScenarioSpec parse_config(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw ConfigError("", "cannot read config file " + file.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace neuroloop
