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


#ifndef TFBELL_PIPELINE_HPP
#define TFBELL_PIPELINE_HPP

// Declarative run configuration and the command workflows built on it:
// simulate, ingest, wrap, bell, lhv, pvalue, pipeline and sweep. Each
// command is a plain function taking a RunConfig and returning a JSON
// summary; files go under RunConfig::out_dir.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfbell/bell.hpp"
#include "tfbell/core.hpp"
#include "tfbell/error.hpp"
#include "tfbell/io.hpp"
#include "tfbell/lhv.hpp"
#include "tfbell/simulate.hpp"
#include "tfbell/stats.hpp"
#include "tfbell/wrapfit.hpp"

namespace tfbell {

using nlohmann::json;

enum class CalibrationMode { fit, truth, automatic };
enum class OutputFormat { json, csv };

struct RunConfig {
  // scenario
  int d = 6;
  int bases = 38;
  int periods = 0;  ///< periods per axis of a synthetic record; 0 picks the envelope-driven minimum
  // state
  std::string state_kind = "max_entangled";  ///< max_entangled | optimal | custom
  std::vector<double> lambda;                ///< custom Schmidt weights (normalised on use)
  // noise and time bins
  NoiseModel noise{1.0, 0.0, 1e7};
  TimeBins bins;
  std::uint64_t seed = 1;
  // inputs; empty means "simulate"
  std::string input_jsi;
  std::string input_wrapped;
  CalibrationMode calibration = CalibrationMode::automatic;
  // statistics
  int resamples = 50;
  SettingsMode settings_mode = SettingsMode::estimated;
  // local hidden variables
  bool lhv_enabled = false;
  LhvMethod lhv_method = LhvMethod::lp_exact;
  double lhv_tolerance = 1e-4;
  std::vector<int> lhv_alice_bases;  ///< empty means the CGLMP bases
  std::vector<int> lhv_bob_bases;
  // sweep
  int sweep_d_min = 2;
  int sweep_d_max = 8;
  bool sweep_lp = false;
  // output
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::json;

  Scenario scenario() const { return {d, bases}; }

  StateCoefficients state() const {
    if (state_kind == "max_entangled") return StateCoefficients::maximally_entangled(d);
    if (state_kind == "optimal") return optimize_state(d).lambda;
    return StateCoefficients::normalized(lambda);
  }
};

namespace detail {

/// Strict reader: every key must be consumed, otherwise the document is rejected.
class ConfigReader {
 public:
  ConfigReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& dst) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where_ + "." + key + ": wrong type");
    }
  }

  std::optional<ConfigReader> section(const char* key) {
    seen_.push_back(key);
    if (!j_.contains(key)) return std::nullopt;
    return ConfigReader(j_.at(key), where_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        throw ValidationError(where_ + ": unknown key '" + key + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

inline std::string resolve(const std::string& path, const std::filesystem::path& base) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (base / path).lexically_normal().string();
}

}  // namespace detail

/// Checks every field; called by parse_config and before each command.
inline void validate(const RunConfig& c) {
  using detail::require;
  (void)c.scenario();
  require(c.periods >= 0, "scenario.periods must be >= 0");
  require(c.state_kind == "max_entangled" || c.state_kind == "optimal" || c.state_kind == "custom",
          "state.kind must be max_entangled, optimal or custom");
  if (c.state_kind == "custom")
    require(static_cast<int>(c.lambda.size()) == c.d, "state.lambda must have d entries");
  else
    require(c.lambda.empty(), "state.lambda is only allowed with state.kind = custom");
  c.noise.validate();
  require(c.bins.delta_t > 0.0 && c.bins.sigma_t > 0.0 && c.bins.width_scale > 0.0,
          "time_bins entries must be positive");
  require(c.input_jsi.empty() || c.input_wrapped.empty(), "give at most one of input.jsi and input.wrapped");
  require(c.resamples >= 2, "bootstrap.resamples must be >= 2");
  require(c.lhv_tolerance > 0.0 && c.lhv_tolerance < 0.5, "lhv.tolerance must lie in (0, 0.5)");
  require(c.lhv_alice_bases.empty() == c.lhv_bob_bases.empty(),
          "lhv.alice_bases and lhv.bob_bases must be given together");
  for (int b : c.lhv_alice_bases) require(b >= 0 && b < c.bases, "lhv.alice_bases entry out of range");
  for (int b : c.lhv_bob_bases) require(b >= 0 && b < c.bases, "lhv.bob_bases entry out of range");
  require(c.sweep_d_min >= 2 && c.sweep_d_max <= kMaxDimension && c.sweep_d_min <= c.sweep_d_max,
          "sweep range must satisfy 2 <= d_min <= d_max <= 16");
  require(!c.out_dir.empty(), "output.dir must not be empty");
}

/// Builds a RunConfig from a JSON document; relative input paths resolve against `base_dir`.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  RunConfig c;
  detail::ConfigReader root(j, "config");
  if (auto s = root.section("scenario")) {
    s->get("d", c.d);
    s->get("M", c.bases);
    s->get("periods", c.periods);
    s->finish();
  }
  if (auto s = root.section("state")) {
    s->get("kind", c.state_kind);
    s->get("lambda", c.lambda);
    s->finish();
  }
  if (auto s = root.section("noise")) {
    s->get("visibility", c.noise.visibility);
    s->get("jitter_sigma_s", c.noise.jitter_sigma);
    s->get("total_coincidences", c.noise.total_coincidences);
    s->finish();
  }
  if (auto s = root.section("time_bins")) {
    s->get("delta_t_s", c.bins.delta_t);
    s->get("sigma_t_s", c.bins.sigma_t);
    s->get("width_scale", c.bins.width_scale);
    s->finish();
  }
  root.get("seed", c.seed);
  if (auto s = root.section("input")) {
    s->get("jsi", c.input_jsi);
    s->get("wrapped", c.input_wrapped);
    s->finish();
  }
  std::string cal = "auto";
  root.get("calibration", cal);
  if (cal == "fit")
    c.calibration = CalibrationMode::fit;
  else if (cal == "truth")
    c.calibration = CalibrationMode::truth;
  else if (cal == "auto")
    c.calibration = CalibrationMode::automatic;
  else
    throw ValidationError("config.calibration must be fit, truth or auto");
  if (auto s = root.section("bootstrap")) {
    s->get("resamples", c.resamples);
    s->finish();
  }
  if (auto s = root.section("pvalue")) {
    std::string mode = "estimated";
    s->get("settings", mode);
    s->finish();
    if (mode != "estimated" && mode != "uniform")
      throw ValidationError("config.pvalue.settings must be estimated or uniform");
    c.settings_mode = mode == "estimated" ? SettingsMode::estimated : SettingsMode::uniform;
  }
  if (auto s = root.section("lhv")) {
    std::string method = "lp";
    s->get("enabled", c.lhv_enabled);
    s->get("method", method);
    s->get("tolerance", c.lhv_tolerance);
    s->get("alice_bases", c.lhv_alice_bases);
    s->get("bob_bases", c.lhv_bob_bases);
    s->finish();
    if (method != "lp" && method != "fw") throw ValidationError("config.lhv.method must be lp or fw");
    c.lhv_method = method == "lp" ? LhvMethod::lp_exact : LhvMethod::fw_bounds;
  }
  if (auto s = root.section("sweep")) {
    s->get("d_min", c.sweep_d_min);
    s->get("d_max", c.sweep_d_max);
    s->get("lp", c.sweep_lp);
    s->finish();
  }
  if (auto s = root.section("output")) {
    std::string format = "json";
    s->get("dir", c.out_dir);
    s->get("format", format);
    s->finish();
    if (format != "json" && format != "csv") throw ValidationError("config.output.format must be json or csv");
    c.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
  }
  root.finish();
  c.input_jsi = detail::resolve(c.input_jsi, base_dir);
  c.input_wrapped = detail::resolve(c.input_wrapped, base_dir);
  validate(c);
  return c;
}

/// Reads a config file and applies `overrides` (a JSON merge patch) before validation.
inline RunConfig load_config(const std::filesystem::path& path, const json& overrides = json::object()) {
  json j = io::read_json(path);
  j.merge_patch(overrides);
  return parse_config(j, path.parent_path());
}

namespace detail {

/// Runs `fn`, prefixing any library error with the stage name and a hint.
template <class F>
auto stage(const char* name, const char* hint, F&& fn) -> decltype(fn()) {
  auto tag = [&](const std::exception& e) {
    return std::string("[") + name + "] " + e.what() + " (hint: " + hint + ")";
  };
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(tag(e));
  } catch (const IoError& e) {
    throw IoError(tag(e));
  } catch (const ComputationError& e) {
    throw ComputationError(tag(e));
  }
}

inline json round_trip_fields(const BellInequality& ineq) {
  return {{"label", ineq.label}, {"local_bound", ineq.local_bound}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage building blocks

/// Phase grid of a synthetic record for this configuration.
inline PhaseGrid synthetic_grid(const RunConfig& c) {
  const Scenario s = c.scenario();
  const int periods = c.periods > 0 ? c.periods : periods_for_envelope(s, c.bins);
  return PhaseGrid::cglmp(s, periods);
}

/// Calibration known by construction for a synthetic record.
inline Calibration synthetic_calibration(const Scenario& s, const PhaseGrid& grid) {
  const long long c = synthetic_centre_bin(s, grid);
  const double w = grid.bin_width();
  return {c - std::llround(grid.alice_origin() / w),
          c - std::llround(grid.bob_origin() / w + s.bases() / 4.0)};
}

inline JsiRecord simulate_jsi(const RunConfig& c) {
  return synthesize_jsi(c.scenario(), synthetic_grid(c), c.state(), c.noise, c.bins, c.seed);
}

struct WrapOutcome {
  WrappedDistribution wrapped;
  Calibration calibration;
  std::string method;  ///< "fit" or "truth"
  std::optional<FringeModel> fit;
  std::string fit_error;  ///< reason the fit was skipped or rejected in auto mode
  double record_total = 0.0;
  double wrapped_total = 0.0;
};

/// Fit, calibrate and wrap. `truth` is the known calibration of synthetic data.
inline WrapOutcome wrap_record(const JsiRecord& jsi, const Scenario& s, CalibrationMode mode,
                               std::optional<Calibration> truth) {
  WrapOutcome out;
  out.record_total = jsi.total();
  CalibratedCounts cc{s, {}, {}, {}, {}};
  if (mode == CalibrationMode::truth) {
    if (!truth) throw ValidationError("calibration = truth is only available for simulated records");
    cc = apply_calibration(jsi, s, *truth);
    out.method = "truth";
  } else {
    try {
      out.fit = fit_principal_fringes(jsi, s.dimension());
      cc = phase_calibrate(jsi, *out.fit, s);
      out.method = "fit";
    } catch (const FitError& e) {
      if (mode == CalibrationMode::fit || !truth) throw;
      out.fit.reset();
      out.fit_error = e.what();
      cc = apply_calibration(jsi, s, *truth);
      out.method = "truth";
    }
  }
  out.calibration = cc.calibration;
  out.wrapped = wrap(cc);
  out.wrapped_total = out.wrapped.values.sum();
  return out;
}

/// Counts (or probabilities) at the CGLMP settings, in inequality order.
inline OutcomeTable cglmp_table(const WrappedDistribution& w, const Scenario& s) {
  const auto idx = cglmp_basis_indices(s);
  return w.to_table(s, idx.alice, idx.bob);
}

inline ConditionalProbabilities normalized_blocks(OutcomeTable t, std::vector<int> xs, std::vector<int> ys) {
  const int d = t.dimension();
  for (int x = 0; x < t.alice_settings(); ++x)
    for (int y = 0; y < t.bob_settings(); ++y) {
      const double total = t.block_sum(x, y);
      if (!(total > 0.0))
        throw ValidationError("setting pair (x=" + std::to_string(x) + ", y=" + std::to_string(y) +
                              ") has no counts");
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) t(a, b, x, y) /= total;
    }
  return {std::move(t), std::move(xs), std::move(ys)};
}

inline ConditionalProbabilities cglmp_probabilities(const WrappedDistribution& w, const Scenario& s) {
  const auto idx = cglmp_basis_indices(s);
  return normalized_blocks(cglmp_table(w, s), {idx.alice.begin(), idx.alice.end()},
                           {idx.bob.begin(), idx.bob.end()});
}

inline BellResult bell_from_counts(const WrappedDistribution& counts, const Scenario& s, int resamples,
                                   std::uint64_t seed) {
  const auto p = cglmp_probabilities(counts, s);
  const auto idx = cglmp_basis_indices(s);
  BellResult r;
  r.value = cglmp_value(p);
  r.sigma = poisson_bootstrap(counts, s, {resamples, seed, 0}).sigma;
  r.dimension = s.dimension();
  r.alice_bases = idx.alice;
  r.bob_bases = idx.bob;
  return r;
}

inline PValue pvalue_from_counts(const WrappedDistribution& counts, const Scenario& s, SettingsMode mode) {
  const auto model = score_model(cglmp_inequality(s.dimension()), cglmp_table(counts, s), mode);
  return mcdiarmid_pvalue(model);
}

inline LhvResult lhv_analysis(const ConditionalProbabilities& p, const RunConfig& c) {
  const auto noise = uniform_behavior(p.dimension(), p.alice_settings(), p.bob_settings());
  if (c.lhv_method == LhvMethod::lp_exact) return lp_visibility(p, noise);
  FwOptions opt;
  opt.tolerance = c.lhv_tolerance;
  opt.seed = c.seed;
  return fw_visibility(p, noise, opt);
}

inline json lhv_to_json(const LhvResult& r) {
  json j = {{"method", r.method == LhvMethod::lp_exact ? "lp" : "fw"},
            {"v_crit", r.v_crit},
            {"v_lower", r.v_lower},
            {"v_upper", r.v_upper},
            {"noise_tolerance", 1.0 - r.v_crit},
            {"heuristic_oracle", r.heuristic_oracle},
            {"iterations", r.iterations},
            {"noise_model", "white (uniform P(a,b|x,y))"}};
  if (r.certificate) {
    j["certificate"] = detail::round_trip_fields(*r.certificate);
    j["certificate"]["coefficients"] = std::vector<double>(r.certificate->coefficients.flat().begin(),
                                                           r.certificate->coefficients.flat().end());
  }
  return j;
}

/// Flattens nested objects to dotted keys for CSV summaries.
inline void flatten(const json& j, const std::string& prefix, std::vector<std::vector<std::string>>& rows) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, rows);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", rows);
  } else if (j.is_number_float()) {
    rows.push_back({prefix, io::format_number(j.get<double>())});
  } else if (j.is_string()) {
    rows.push_back({prefix, j.get<std::string>()});
  } else {
    rows.push_back({prefix, j.dump()});
  }
}

/// Writes a command summary as <name>.json or <name>.csv in the output directory.
inline std::string write_summary(const RunConfig& c, const std::string& name, const json& summary) {
  const std::filesystem::path dir(c.out_dir);
  if (c.format == OutputFormat::json) {
    io::write_json(dir / (name + ".json"), summary);
    return name + ".json";
  }
  std::vector<std::vector<std::string>> rows;
  flatten(summary, "", rows);
  io::write_atomic(dir / (name + ".csv"), io::table_to_csv({"key", "value"}, rows));
  return name + ".csv";
}

inline json scenario_json(const Scenario& s) {
  return {{"d", s.dimension()}, {"M", s.bases()}, {"N", s.outcomes_per_period()}};
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

struct Source {
  JsiRecord jsi;
  std::optional<Calibration> truth;
  std::string origin;
};

inline Source acquire(const RunConfig& c) {
  if (!c.input_jsi.empty())
    return stage("ingest", "check the CSV layout and its JSON sidecar", [&] {
      return Source{io::ingest_jsi(c.input_jsi), std::nullopt, "ingested"};
    });
  return stage("simulate", "check scenario, state, noise and time_bins", [&] {
    const auto grid = synthetic_grid(c);
    return Source{simulate_jsi(c), synthetic_calibration(c.scenario(), grid), "simulated"};
  });
}

inline WrapOutcome wrap_stage(const RunConfig& c, const Source& src) {
  return stage("wrap", "check that d and M match the record, or set calibration = truth for synthetic data",
               [&] { return wrap_record(src.jsi, c.scenario(), c.calibration, src.truth); });
}

inline WrappedDistribution wrapped_counts(const RunConfig& c) {
  if (!c.input_wrapped.empty())
    return stage("wrap", "check the wrapped CSV and its sidecar", [&] {
      auto f = io::read_wrapped(c.input_wrapped);
      if (!(f.scenario == c.scenario()))
        throw ValidationError("wrapped file has d = " + std::to_string(f.scenario.dimension()) +
                              ", M = " + std::to_string(f.scenario.bases()) + " but the config asks for d = " +
                              std::to_string(c.d) + ", M = " + std::to_string(c.bases));
      if (f.distribution.kind != DistributionKind::counts)
        throw ValidationError("wrapped file holds probabilities; counts are required here");
      return f.distribution;
    });
  return wrap_stage(c, acquire(c)).wrapped;
}

inline json wrap_json(const WrapOutcome& w) {
  json j = {{"method", w.method},
            {"alice_zero_bin", w.calibration.alice_zero_bin},
            {"bob_zero_bin", w.calibration.bob_zero_bin},
            {"record_counts", w.record_total},
            {"wrapped_counts", w.wrapped_total}};
  if (w.fit) {
    j["fit"] = {{"period_bins", w.fit->period_bins},
                {"unconstrained_period_bins", w.fit->unconstrained_period},
                {"offset_bins", w.fit->offset_bins},
                {"amplitudes", w.fit->amplitudes},
                {"width_bins", w.fit->width},
                {"background", w.fit->background},
                {"reduced_chi2", w.fit->reduced_chi2}};
  }
  if (!w.fit_error.empty()) j["fit_fallback_reason"] = w.fit_error;
  return j;
}

}  // namespace detail

inline json cmd_simulate(const RunConfig& c) {
  validate(c);
  const auto grid = detail::stage("simulate", "check scenario, state, noise and time_bins",
                                  [&] { return synthetic_grid(c); });
  const JsiRecord jsi = detail::stage("simulate", "check scenario, state, noise and time_bins",
                                      [&] { return simulate_jsi(c); });
  const std::filesystem::path dir(c.out_dir);
  detail::stage("simulate", "check that the output directory is writable",
                [&] { io::write_jsi(dir / "jsi.csv", jsi); });
  const auto truth = synthetic_calibration(c.scenario(), grid);
  json j = {{"command", "simulate"},
            {"scenario", scenario_json(c.scenario())},
            {"seed", c.seed},
            {"periods_covered", grid.periods_covered()},
            {"envelope_mass_outside", envelope_mass_outside(c.scenario(), grid, c.bins)},
            {"total_counts", jsi.total()},
            {"true_calibration", {{"alice_zero_bin", truth.alice_zero_bin}, {"bob_zero_bin", truth.bob_zero_bin}}},
            {"artifacts", {{"jsi", "jsi.csv"}, {"jsi_metadata", "jsi.json"}}}};
  write_summary(c, "simulate", j);
  return j;
}

inline json cmd_ingest(const RunConfig& c) {
  validate(c);
  if (c.input_jsi.empty()) throw ValidationError("[ingest] input.jsi is required (hint: pass --input-jsi)");
  const auto src = detail::acquire(c);
  detail::stage("ingest", "check that the output directory is writable",
                [&] { io::write_jsi(std::filesystem::path(c.out_dir) / "jsi.csv", src.jsi); });
  json j = {{"command", "ingest"},
            {"rows", src.jsi.counts.rows()},
            {"columns", src.jsi.counts.cols()},
            {"total_counts", src.jsi.total()},
            {"axis_unit", "Hz"},
            {"artifacts", {{"jsi", "jsi.csv"}, {"jsi_metadata", "jsi.json"}}}};
  write_summary(c, "ingest", j);
  return j;
}

inline json cmd_wrap(const RunConfig& c) {
  validate(c);
  const auto src = detail::acquire(c);
  const auto w = detail::wrap_stage(c, src);
  const std::filesystem::path dir(c.out_dir);
  detail::stage("wrap", "check that the output directory is writable",
                [&] { io::write_wrapped(dir / "wrapped.csv", w.wrapped, c.scenario()); });
  json j = {{"command", "wrap"},
            {"scenario", scenario_json(c.scenario())},
            {"calibration", detail::wrap_json(w)},
            {"artifacts", {{"wrapped", "wrapped.csv"}, {"wrapped_metadata", "wrapped.json"}}}};
  write_summary(c, "wrap", j);
  return j;
}

inline json cmd_bell(const RunConfig& c) {
  validate(c);
  const auto counts = detail::wrapped_counts(c);
  const Scenario s = c.scenario();
  const auto r = detail::stage("bell", "every CGLMP setting pair needs counts",
                               [&] { return bell_from_counts(counts, s, c.resamples, c.seed); });
  json j = {{"command", "bell"},
            {"scenario", scenario_json(s)},
            {"I_d", {{"value", r.value}, {"sigma", r.sigma}, {"local_bound", kCglmpLocalBound},
                     {"unit", "dimensionless"}, {"bootstrap_resamples", c.resamples}}},
            {"cglmp_bases", {{"alice", r.alice_bases}, {"bob", r.bob_bases}}}};
  write_summary(c, "bell", j);
  return j;
}

inline json cmd_pvalue(const RunConfig& c) {
  validate(c);
  const auto counts = detail::wrapped_counts(c);
  const Scenario s = c.scenario();
  const auto model = detail::stage("pvalue", "every CGLMP setting pair needs counts", [&] {
    return score_model(cglmp_inequality(s.dimension()), cglmp_table(counts, s), c.settings_mode);
  });
  const auto p = detail::stage("pvalue", "the score range must straddle the local bound",
                               [&] { return mcdiarmid_pvalue(model); });
  json j = {{"command", "pvalue"},
            {"scenario", scenario_json(s)},
            {"settings_probability", c.settings_mode == SettingsMode::estimated ? "estimated" : "uniform"},
            {"rounds", model.n},
            {"mean_score", model.mean()},
            {"s_max", model.s_max},
            {"s_min", model.s_min},
            {"local_bound", model.beta_l},
            {"log10_p", p.log10_p},
            {"p_bound", p.p}};
  write_summary(c, "pvalue", j);
  return j;
}

/// Distribution the lhv command analyses: measured (wrapped input) or binned theory.
inline ConditionalProbabilities lhv_target(const RunConfig& c) {
  const Scenario s = c.scenario();
  std::vector<int> xs = c.lhv_alice_bases, ys = c.lhv_bob_bases;
  if (xs.empty()) {
    const auto idx = cglmp_basis_indices(s);
    xs.assign(idx.alice.begin(), idx.alice.end());
    ys.assign(idx.bob.begin(), idx.bob.end());
  }
  if (!c.input_wrapped.empty() || !c.input_jsi.empty()) {
    const auto counts = detail::wrapped_counts(c);
    return normalized_blocks(counts.to_table(s, xs, ys), xs, ys);
  }
  const auto w = jpd_binned(s, PhaseGrid::cglmp(s), c.state());
  WrappedDistribution mixed = w;
  const double flat = 1.0 / (static_cast<double>(s.dimension()) * s.dimension());
  mixed.values = c.noise.visibility * w.values + (1.0 - c.noise.visibility) * Eigen::MatrixXd::Constant(
                                                                                    w.values.rows(), w.values.cols(), flat);
  return {mixed.to_table(s, xs, ys), xs, ys};
}

inline json cmd_lhv(const RunConfig& c) {
  validate(c);
  const auto target = detail::stage("lhv", "check lhv bases and inputs", [&] { return lhv_target(c); });
  const auto r = detail::stage("lhv", "reduce settings or use method = fw for large scenarios",
                               [&] { return lhv_analysis(target, c); });
  json j = {{"command", "lhv"},
            {"scenario", scenario_json(c.scenario())},
            {"source", c.input_wrapped.empty() && c.input_jsi.empty() ? "binned theory" : "measured"},
            {"alice_bases", target.alice_bases()},
            {"bob_bases", target.bob_bases()},
            {"result", lhv_to_json(r)}};
  write_summary(c, "lhv", j);
  return j;
}

/// Full chain: simulate or ingest, fit, wrap, normalise, I_d, bootstrap, p-value.
inline json run_pipeline(const RunConfig& c) {
  validate(c);
  const Scenario s = c.scenario();
  const std::filesystem::path dir(c.out_dir);
  const auto src = detail::acquire(c);
  detail::stage("simulate", "check that the output directory is writable",
                [&] { io::write_jsi(dir / "jsi.csv", src.jsi); });
  const auto w = detail::wrap_stage(c, src);
  const auto probs = detail::stage("normalize", "every (x, y) block needs counts",
                                   [&] { return normalize_wrapped(w.wrapped, s); });
  const auto bell = detail::stage("bell", "every CGLMP setting pair needs counts",
                                  [&] { return bell_from_counts(w.wrapped, s, c.resamples, c.seed); });
  const auto p = detail::stage("pvalue", "the score range must straddle the local bound",
                               [&] { return pvalue_from_counts(w.wrapped, s, c.settings_mode); });

  detail::stage("report", "check that the output directory is writable", [&] {
    io::write_wrapped(dir / "wrapped.csv", w.wrapped, s);
    io::write_atomic(dir / "wrapped_heatmap.csv", io::matrix_to_csv(probs.values));
    const auto idx = cglmp_basis_indices(s);
    const auto counts = cglmp_table(w.wrapped, s);
    const auto pr = cglmp_probabilities(w.wrapped, s);
    std::vector<std::vector<std::string>> rows;
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < s.dimension(); ++a)
          for (int b = 0; b < s.dimension(); ++b)
            rows.push_back({std::to_string(x), std::to_string(y), std::to_string(a), std::to_string(b),
                            std::to_string(idx.alice[x]), std::to_string(idx.bob[y]),
                            io::format_number(counts(a, b, x, y)), io::format_number(pr(a, b, x, y))});
    io::write_atomic(dir / "cglmp_bars.csv",
                     io::table_to_csv({"x", "y", "a", "b", "alice_basis", "bob_basis", "counts", "probability"}, rows));
  });

  json report = {{"schema", "tfbell-report/1"},
                 {"scenario", scenario_json(s)},
                 {"source", src.origin},
                 {"seed", c.seed},
                 {"calibration", detail::wrap_json(w)},
                 {"I_d", {{"value", bell.value}, {"sigma", bell.sigma}, {"local_bound", kCglmpLocalBound},
                          {"unit", "dimensionless"}, {"bootstrap_resamples", c.resamples}}},
                 {"pvalue", {{"log10_p", p.log10_p}, {"p_bound", p.p},
                             {"settings_probability",
                              c.settings_mode == SettingsMode::estimated ? "estimated" : "uniform"}}},
                 {"artifacts", {{"jsi_heatmap", "jsi.csv"},
                                {"jsi_metadata", "jsi.json"},
                                {"wrapped_counts", "wrapped.csv"},
                                {"wrapped_metadata", "wrapped.json"},
                                {"wrapped_heatmap", "wrapped_heatmap.csv"},
                                {"cglmp_bars", "cglmp_bars.csv"},
                                {"report", "report.json"}}}};
  if (src.truth) {
    const double binned = binned_cglmp(s, c.state());
    report["theory"] = {{"binned_I_d", binned},
                        {"binned_I_d_at_visibility", c.noise.visibility * binned},
                        {"note", "white noise scores zero, so I_d scales linearly with visibility"}};
  }
  if (c.lhv_enabled) {
    const auto target = cglmp_probabilities(w.wrapped, s);
    report["v_crit"] = detail::stage("lhv", "use lhv.method = fw for large scenarios",
                                     [&] { return lhv_to_json(lhv_analysis(target, c)); });
  }
  detail::stage("report", "check that the output directory is writable",
                [&] { io::write_json(dir / "report.json", report); });
  return report;
}

struct SweepRow {
  int d = 0;
  double max_entangled = 0.0;
  double optimal = 0.0;
  double tolerance_multi = 0.0;
  std::optional<double> tolerance_binarised;
  std::optional<double> v_crit_lp;
};

inline std::vector<SweepRow> sweep_rows(int d_min, int d_max, bool with_lp) {
  std::vector<SweepRow> rows;
  for (int d = d_min; d <= d_max; ++d) {
    SweepRow r;
    r.d = d;
    r.max_entangled = theoretical_cglmp(d);
    const auto opt = optimize_state(d);
    r.optimal = opt.value;
    r.tolerance_multi = noise_tolerance(opt.value).tolerance;
    if (auto ref = binarised_reference(d)) r.tolerance_binarised = ref->binarised;
    if (with_lp) {
      const Scenario s(d, 2);
      const auto idx = cglmp_basis_indices(s);
      const auto p = conditional_from_state(opt.lambda, s, idx.alice, idx.bob);
      r.v_crit_lp = lp_visibility(p, uniform_behavior(d, 2, 2)).v_crit;
    }
    rows.push_back(r);
  }
  return rows;
}

inline json run_sweep(const RunConfig& c) {
  validate(c);
  const auto rows = detail::stage("sweep", "narrow the d range or disable lp",
                                  [&] { return sweep_rows(c.sweep_d_min, c.sweep_d_max, c.sweep_lp); });
  std::vector<std::string> header = {"d", "I_d_max_entangled", "I_d_optimal", "tolerance_multi",
                                     "tolerance_binarised_reference"};
  if (c.sweep_lp) header.push_back("v_crit_LP");
  std::vector<std::vector<std::string>> table;
  json arr = json::array();
  for (const auto& r : rows) {
    std::vector<std::string> cells = {std::to_string(r.d), io::format_number(r.max_entangled),
                                      io::format_number(r.optimal), io::format_number(r.tolerance_multi),
                                      r.tolerance_binarised ? io::format_number(*r.tolerance_binarised) : ""};
    json jr = {{"d", r.d}, {"I_d_max_entangled", r.max_entangled}, {"I_d_optimal", r.optimal},
               {"tolerance_multi", r.tolerance_multi},
               {"tolerance_binarised_reference", r.tolerance_binarised ? json(*r.tolerance_binarised) : json()}};
    if (c.sweep_lp) {
      cells.push_back(io::format_number(*r.v_crit_lp));
      jr["v_crit_LP"] = *r.v_crit_lp;
    }
    table.push_back(std::move(cells));
    arr.push_back(std::move(jr));
  }
  const std::filesystem::path dir(c.out_dir);
  json artifacts = {{"table", "sweep.csv"}};
  detail::stage("sweep", "check that the output directory is writable", [&] {
    io::write_atomic(dir / "sweep.csv", io::table_to_csv(header, table));
    if (c.format == OutputFormat::json) {
      io::write_json(dir / "sweep.json", {{"rows", arr}});
      artifacts["json"] = "sweep.json";
    }
  });
  return {{"command", "sweep"}, {"rows", arr}, {"artifacts", artifacts}};
}

}  // namespace tfbell

#endif  // TFBELL_PIPELINE_HPP
