// neuroloop: run scenario configs and write traces, metrics and plots.
//
//   neuroloop open-loop|closed-loop|detect|chirp --config <file>...
//             [--seed N] [--out dir] [--format csv|csv+svg] [--jobs N]
//
// Exit status: 0 success, 2 config error, 3 numerical divergence, 1 other.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "neuroloop/config.hpp"
#include "neuroloop/record_io.hpp"
#include "neuroloop/scenario.hpp"

namespace fs = std::filesystem;
using namespace neuroloop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct Job {
  fs::path config;
  fs::path out;
};

ScenarioKind expected_kind(const std::string& command) {
  if (command == "closed-loop") return ScenarioKind::closed_loop;
  if (command == "chirp") return ScenarioKind::chirp;
  return ScenarioKind::open_loop;
}

const char* kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::open_loop: return "open_loop";
    case ScenarioKind::closed_loop: return "closed_loop";
    case ScenarioKind::chirp: return "chirp";
  }
  return "?";
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", *v);
  return buf;
}

void write_events(const RunRecord& rec, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "time,amplitude\n";
  char buf[64];
  for (const auto& e : rec.events) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", e.time, e.amplitude);
    f << buf;
  }
  if (!f) throw IoError("write to " + path.string() + " failed");
}

int run_job(const std::string& command, const Job& job, std::optional<std::uint64_t> seed,
            ExportFormat format, std::string& log) {
  try {
    ScenarioSpec spec = parse_config(job.config);
    if (seed) {
      spec.seed = *seed;
      spec.perturbation.seed = *seed;
    }
    if (spec.kind != expected_kind(command)) {
      log = job.config.string() + ": config declares scenario \"" + kind_name(spec.kind) +
            "\" but the command is " + command;
      return kExitConfig;
    }
    const RunRecord rec = run_scenario(spec);
    export_run(rec, spec, job.out, format);
    if (command == "detect" || command == "chirp") write_events(rec, job.out / "events.csv");
    const Metrics m = compute_metrics(rec, spec);
    log = job.config.string() + " -> " + job.out.string() + ": rows=" +
          std::to_string(rec.rows.size()) + " events=" + std::to_string(rec.events.size()) +
          " latency=" + fmt_opt(m.detection_latency) +
          " false_positives=" + std::to_string(m.false_positive_count) +
          " activation=" + fmt_opt(m.activation_time) + " rmse=" + fmt_opt(m.tracking_rmse) +
          " u=[" + fmt_opt(m.u_min_obs) + ", " + fmt_opt(m.u_max_obs) + "]";
    return kExitOk;
  } catch (const ConfigError& e) {
    log = job.config.string() + ": config error: " + e.what();
    return kExitConfig;
  } catch (const NumericalDivergence& e) {
    log = job.config.string() + ": numerical divergence: " + e.what();
    return kExitDivergence;
  } catch (const std::exception& e) {
    log = job.config.string() + ": " + e.what();
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop seizure detection and model-free stimulation simulator"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string format = "csv";
  unsigned jobs = 1;

  const std::pair<const char*, const char*> commands[] = {
      {"open-loop", "simulate without stimulation"},
      {"closed-loop", "detect, then stimulate with the model-free controller"},
      {"detect", "open-loop run that also writes the detected maxima"},
      {"chirp", "derivative estimation and detection on a noisy chirp"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", configs, "scenario config file(s)")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv or csv+svg")
        ->check(CLI::IsMember({"csv", "csv+svg"}));
    sub->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const ExportFormat fmt = format == "csv+svg" ? ExportFormat::csv_svg : ExportFormat::csv;

  std::vector<Job> work;
  for (const auto& c : configs) {
    const fs::path out = configs.size() == 1 ? fs::path(out_dir)
                                             : fs::path(out_dir) / fs::path(c).stem();
    work.push_back({c, out});
  }

  std::vector<int> codes(work.size(), kExitOk);
  std::vector<std::string> logs(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      codes[i] = run_job(command, work[i], seed, fmt, logs[i]);
    }
  };
  const unsigned n_threads = std::min<unsigned>(jobs, static_cast<unsigned>(work.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int status = kExitOk;
  for (std::size_t i = 0; i < work.size(); ++i) {
    (codes[i] == kExitOk ? std::cout : std::cerr) << logs[i] << '\n';
    // Config errors dominate divergence, which dominates other failures.
    if (codes[i] == kExitConfig || (codes[i] == kExitDivergence && status != kExitConfig) ||
        (codes[i] == kExitFailure && status == kExitOk)) {
      status = codes[i];
    }
  }
  return status;
}
