#include "neuroloop/record_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <vector>

#include "neuroloop/svg_plot.hpp"

namespace neuroloop {

namespace {

void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  line += buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

void check_written(const std::ofstream& f, const std::filesystem::path& path) {
  if (!f) throw IoError("write to " + path.string() + " failed");
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void write_csv(const RunRecord& record, std::ostream& out) {
  out << kCsvHeader << '\n';
  std::string line;
  for (const auto& r : record.rows) {
    line.clear();
    put(line, r.t);
    for (double y : r.y) {
      line += ',';
      put(line, y);
    }
    for (double v : {r.ym, r.ymeas, r.ystar, r.u, r.p, r.fest, r.dest, r.interval}) {
      line += ',';
      put(line, v);
    }
    line += r.flag ? ",1\n" : ",0\n";
    out << line;
  }
}

void write_csv(const RunRecord& record, const std::filesystem::path& path) {
  auto f = open_out(path);
  write_csv(record, f);
  f.flush();
  check_written(f, path);
}

RunRecord read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw IoError("CSV header mismatch");
  }
  RunRecord rec;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      v.push_back(std::strtod(p, &end));
      if (end == p) throw IoError("bad number on CSV line " + std::to_string(lineno));
      if (*end == '\0') break;
      if (*end != ',') throw IoError("bad separator on CSV line " + std::to_string(lineno));
      p = end + 1;
    }
    if (v.size() != 15) {
      throw IoError("CSV line " + std::to_string(lineno) + " has " +
                               std::to_string(v.size()) + " fields, expected 15");
    }
    RunRow r;
    r.t = v[0];
    for (int i = 0; i < 5; ++i) r.y[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(1 + i)];
    r.ym = v[6];
    r.ymeas = v[7];
    r.ystar = v[8];
    r.u = v[9];
    r.p = v[10];
    r.fest = v[11];
    r.dest = v[12];
    r.interval = v[13];
    r.flag = v[14] != 0.0;
    rec.rows.push_back(r);
  }
  if (rec.rows.size() >= 2) rec.fs = 1.0 / (rec.rows[1].t - rec.rows[0].t);
  return rec;
}

RunRecord read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return read_csv(f);
  } catch (const std::runtime_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string metrics_json(const Metrics& m) {
  nlohmann::json j;
  j["tracking_rmse"] = opt(m.tracking_rmse);
  j["u_min_obs"] = m.u_min_obs;
  j["u_max_obs"] = m.u_max_obs;
  j["detection_latency"] = opt(m.detection_latency);
  j["false_positive_count"] = m.false_positive_count;
  j["activation_time"] = opt(m.activation_time);
  j["reference_sd"] = opt(m.reference_sd);
  j["u_chatter_count"] = m.u_chatter_count;
  return j.dump(2) + "\n";
}

void write_metrics(const Metrics& m, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << metrics_json(m);
  f.flush();
  check_written(f, path);
}

void export_run(const RunRecord& record, const ScenarioSpec& spec,
                const std::filesystem::path& dir, ExportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_csv(record, dir / "trace.csv");
  write_metrics(compute_metrics(record, spec), dir / "metrics.json");
  if (format == ExportFormat::csv_svg) write_svg_panels(record, spec.output_signal, dir);
}

}  // namespace neuroloop
