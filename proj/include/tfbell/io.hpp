// Copyright 2026 The tfbell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef TFBELL_IO_HPP
#define TFBELL_IO_HPP

// On-disk formats.
//
// JSI: a CSV matrix whose first two lines hold the axes,
//
//   axis_a,<v_0>,<v_1>,...
//   axis_b,<v_0>,<v_1>,...
//   <row 0 counts>
//   ...
//
// with instrument metadata in a JSON sidecar (same path, extension .json) or,
// when no sidecar exists, in leading '#' comment lines holding the same JSON.
// Numbers are written in shortest round-trip form, so a write/read cycle is
// bit-exact. Every file is written to a temporary and renamed into place.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "tfbell/core.hpp"
#include "tfbell/error.hpp"

namespace tfbell::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Speed of light in vacuum [m/s].
inline constexpr double kSpeedOfLight = 299792458.0;

/// Shortest decimal form that reads back to the same double.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot write non-finite number");
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline double parse_number(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw IoError("malformed number '" + std::string(text) + "' at " + where);
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

inline std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

/// Parses rows of comma-separated numbers; all rows must have equal length.
inline Eigen::MatrixXd matrix_from_lines(const std::vector<std::string>& lines, std::size_t first,
                                         const std::string& source, std::size_t line_offset = 0) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = first; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const auto cells = split_csv(lines[k]);
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(parse_number(cells[c], source + " line " + std::to_string(k + 1 + line_offset) +
                                               ", column " + std::to_string(c + 1)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(source + " line " + std::to_string(k + 1 + line_offset) + ": expected " +
                    std::to_string(rows.front().size()) + " columns, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(source + ": no matrix rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

// ---------------------------------------------------------------------------
// JSI records

inline json meta_to_json(const JsiRecord& r) {
  return {{"format", "tfbell-jsi"},
          {"version", 1},
          {"unit", r.unit == AxisUnit::hertz ? "Hz" : "ps"},
          {"instrument",
           {{"delta_t_s", r.meta.delta_t},
            {"sigma_t_s", r.meta.sigma_t},
            {"jitter_sigma_s", r.meta.jitter_sigma},
            {"dispersion_ps_per_nm", r.meta.dispersion_ps_per_nm},
            {"lambda_ref_nm", r.meta.lambda_ref_nm},
            {"t_ref_ps", r.meta.t_ref_ps}}}};
}

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw IoError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw IoError(where + ": unknown key '" + key + "'");
  }
}

inline void meta_from_json(const json& j, JsiRecord& r, const std::string& where) {
  check_keys(j, {"format", "version", "unit", "instrument"}, where);
  if (!j.contains("unit")) throw IoError(where + ": missing 'unit' (\"Hz\" or \"ps\")");
  const auto unit = j.at("unit").get<std::string>();
  if (unit == "Hz")
    r.unit = AxisUnit::hertz;
  else if (unit == "ps")
    r.unit = AxisUnit::picoseconds;
  else
    throw IoError(where + ": unit must be \"Hz\" or \"ps\", got \"" + unit + "\"");
  if (!j.contains("instrument")) return;
  const json& ins = j.at("instrument");
  check_keys(ins, {"delta_t_s", "sigma_t_s", "jitter_sigma_s", "dispersion_ps_per_nm", "lambda_ref_nm", "t_ref_ps"},
             where + " instrument");
  auto get = [&](const char* key, double& dst) {
    if (ins.contains(key)) dst = ins.at(key).get<double>();
  };
  get("delta_t_s", r.meta.delta_t);
  get("sigma_t_s", r.meta.sigma_t);
  get("jitter_sigma_s", r.meta.jitter_sigma);
  get("dispersion_ps_per_nm", r.meta.dispersion_ps_per_nm);
  get("lambda_ref_nm", r.meta.lambda_ref_nm);
  get("t_ref_ps", r.meta.t_ref_ps);
}

/// Optical frequency [Hz] of a photon arriving at `t_ps` on a dispersive line.
inline double frequency_from_arrival(double t_ps, const InstrumentMeta& m) {
  const double lambda_nm = m.lambda_ref_nm + (t_ps - m.t_ref_ps) / m.dispersion_ps_per_nm;
  if (!(lambda_nm > 0.0))
    throw ValidationError("arrival time " + format_number(t_ps) + " ps maps to a non-positive wavelength");
  return kSpeedOfLight / (lambda_nm * 1e-9);
}

/// Converts arrival-time axes to optical frequency; frequency records pass through.
inline JsiRecord to_frequency_axes(JsiRecord r) {
  if (r.unit == AxisUnit::hertz) return r;
  if (r.meta.dispersion_ps_per_nm == 0.0 || !std::isfinite(r.meta.dispersion_ps_per_nm))
    throw ValidationError("time-axis JSI needs instrument.dispersion_ps_per_nm");
  if (!(r.meta.lambda_ref_nm > 0.0)) throw ValidationError("time-axis JSI needs instrument.lambda_ref_nm > 0");
  for (double& t : r.axis_a) t = frequency_from_arrival(t, r.meta);
  for (double& t : r.axis_b) t = frequency_from_arrival(t, r.meta);
  r.unit = AxisUnit::hertz;
  return r;
}

inline void write_jsi(const fs::path& csv, const JsiRecord& r) {
  r.validate(false);
  std::string out = "axis_a";
  for (double v : r.axis_a) out += "," + format_number(v);
  out += "\naxis_b";
  for (double v : r.axis_b) out += "," + format_number(v);
  out += "\n" + matrix_to_csv(r.counts);
  write_json(sidecar_path(csv), meta_to_json(r));
  write_atomic(csv, out);
}

/// Reads a JSI exactly as stored, without unit conversion.
inline JsiRecord read_jsi_raw(const fs::path& csv) {
  if (!fs::exists(csv)) throw IoError("JSI file not found: " + csv.string());
  auto lines = read_lines(csv);
  const std::string src = csv.string();
  std::string preamble;
  std::size_t k = 0;
  for (; k < lines.size() && !lines[k].empty() && lines[k][0] == '#'; ++k) preamble += lines[k].substr(1) + "\n";

  JsiRecord r;
  const fs::path side = sidecar_path(csv);
  if (fs::exists(side)) {
    meta_from_json(read_json(side), r, side.string());
  } else if (!preamble.empty()) {
    json j;
    try {
      j = json::parse(preamble);
    } catch (const json::parse_error& e) {
      throw IoError(src + ": invalid JSON preamble: " + e.what());
    }
    meta_from_json(j, r, src + " preamble");
  } else {
    throw IoError(src + ": no metadata (expected sidecar " + side.string() + " or a '#' JSON preamble)");
  }

  auto axis = [&](const char* name, std::vector<double>& dst) {
    if (k >= lines.size()) throw IoError(src + ": missing " + name + " header line");
    const auto cells = split_csv(lines[k]);
    if (cells.empty() || cells[0] != name)
      throw IoError(src + " line " + std::to_string(k + 1) + ": expected header '" + name + ",...'");
    for (std::size_t c = 1; c < cells.size(); ++c)
      dst.push_back(parse_number(cells[c], src + " line " + std::to_string(k + 1) + ", column " + std::to_string(c + 1)));
    ++k;
  };
  axis("axis_a", r.axis_a);
  axis("axis_b", r.axis_b);
  r.counts = matrix_from_lines(lines, k, src);
  if (static_cast<Eigen::Index>(r.axis_a.size()) != r.counts.rows() ||
      static_cast<Eigen::Index>(r.axis_b.size()) != r.counts.cols())
    throw IoError(src + ": matrix is " + std::to_string(r.counts.rows()) + " x " +
                  std::to_string(r.counts.cols()) + " but axes have " + std::to_string(r.axis_a.size()) +
                  " and " + std::to_string(r.axis_b.size()) + " entries");
  for (Eigen::Index i = 0; i < r.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < r.counts.cols(); ++j)
      if (r.counts(i, j) < 0.0)
        throw ValidationError(src + ": negative count at row " + std::to_string(i + 1) + ", column " +
                              std::to_string(j + 1));
  r.validate(false);
  return r;
}

/// Reads a JSI and returns it on frequency axes.
inline JsiRecord ingest_jsi(const fs::path& csv) { return to_frequency_axes(read_jsi_raw(csv)); }

// ---------------------------------------------------------------------------
// Wrapped distributions

inline void write_wrapped(const fs::path& csv, const WrappedDistribution& w, const Scenario& s) {
  w.validate(s);
  write_json(sidecar_path(csv), {{"format", "tfbell-wrapped"},
                                 {"version", 1},
                                 {"d", s.dimension()},
                                 {"M", s.bases()},
                                 {"kind", w.kind == DistributionKind::counts ? "counts" : "probabilities"}});
  write_atomic(csv, matrix_to_csv(w.values));
}

struct WrappedFile {
  Scenario scenario;
  WrappedDistribution distribution;
};

inline WrappedFile read_wrapped(const fs::path& csv) {
  if (!fs::exists(csv)) throw IoError("wrapped file not found: " + csv.string());
  const json meta = read_json(sidecar_path(csv));
  check_keys(meta, {"format", "version", "d", "M", "kind"}, sidecar_path(csv).string());
  const Scenario s(meta.at("d").get<int>(), meta.at("M").get<int>());
  const auto kind = meta.at("kind").get<std::string>();
  if (kind != "counts" && kind != "probabilities")
    throw IoError(sidecar_path(csv).string() + ": kind must be counts or probabilities");
  WrappedDistribution w{matrix_from_lines(read_lines(csv), 0, csv.string()),
                        kind == "counts" ? DistributionKind::counts : DistributionKind::probabilities};
  w.validate(s);
  return {s, std::move(w)};
}

// ---------------------------------------------------------------------------
// Generic tables

/// CSV with a header row; cells are preformatted strings.
inline std::string table_to_csv(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
    out += '\n';
  }
  return out;
}

}  // namespace tfbell::io

#endif  // TFBELL_IO_HPP
