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


// Command-line front end. Every subcommand takes an optional config file and
// flags that override individual config keys.
//
// Exit codes: 0 success, 2 invalid input, 3 computation failure, 4 I/O failure,
// 1 anything else.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tfbell/pipeline.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitComputation = 3;
constexpr int kExitIo = 4;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, format;
  std::optional<int> d, bases, periods, resamples, d_min, d_max;
  std::optional<std::string> state, calibration, settings, lhv_method, input_jsi, input_wrapped;
  std::optional<double> visibility, jitter, counts, tolerance;
  std::vector<double> lambda;
  bool sweep_lp = false;
  bool lhv = false;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--format", o.format, "summary format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--d", o.d, "dimension d");
  cmd->add_option("--M", o.bases, "bases per period M");
  cmd->add_option("--periods", o.periods, "periods per axis of a synthetic record (0 = automatic)");
  cmd->add_option("--state", o.state, "max_entangled, optimal or custom");
  cmd->add_option("--lambda", o.lambda, "Schmidt weights for a custom state");
  cmd->add_option("--visibility", o.visibility, "state visibility v");
  cmd->add_option("--jitter", o.jitter, "detector jitter std [s]");
  cmd->add_option("--counts", o.counts, "expected total coincidences");
  cmd->add_option("--input-jsi", o.input_jsi, "JSI CSV to ingest");
  cmd->add_option("--input-wrapped", o.input_wrapped, "wrapped counts CSV");
  cmd->add_option("--calibration", o.calibration, "fit, truth or auto")
      ->check(CLI::IsMember({"fit", "truth", "auto"}));
  cmd->add_option("--resamples", o.resamples, "bootstrap resamples");
  cmd->add_option("--settings", o.settings, "settings probability: estimated or uniform")
      ->check(CLI::IsMember({"estimated", "uniform"}));
  cmd->add_flag("--lhv", o.lhv, "also compute the critical visibility");
  cmd->add_option("--lhv-method", o.lhv_method, "lp or fw")->check(CLI::IsMember({"lp", "fw"}));
  cmd->add_option("--tolerance", o.tolerance, "Frank-Wolfe bisection tolerance");
  cmd->add_option("--d-min", o.d_min, "first dimension of a sweep");
  cmd->add_option("--d-max", o.d_max, "last dimension of a sweep");
  cmd->add_flag("--lp", o.sweep_lp, "add LP critical visibilities to a sweep");
}

nlohmann::json patch(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (o.seed) j["seed"] = *o.seed;
  if (o.out_dir) j["output"]["dir"] = *o.out_dir;
  if (o.format) j["output"]["format"] = *o.format;
  if (o.d) j["scenario"]["d"] = *o.d;
  if (o.bases) j["scenario"]["M"] = *o.bases;
  if (o.periods) j["scenario"]["periods"] = *o.periods;
  if (o.state) j["state"]["kind"] = *o.state;
  if (!o.lambda.empty()) j["state"]["lambda"] = o.lambda;
  if (o.visibility) j["noise"]["visibility"] = *o.visibility;
  if (o.jitter) j["noise"]["jitter_sigma_s"] = *o.jitter;
  if (o.counts) j["noise"]["total_coincidences"] = *o.counts;
  if (o.input_jsi) j["input"]["jsi"] = *o.input_jsi;
  if (o.input_wrapped) j["input"]["wrapped"] = *o.input_wrapped;
  if (o.calibration) j["calibration"] = *o.calibration;
  if (o.resamples) j["bootstrap"]["resamples"] = *o.resamples;
  if (o.settings) j["pvalue"]["settings"] = *o.settings;
  if (o.lhv) j["lhv"]["enabled"] = true;
  if (o.lhv_method) j["lhv"]["method"] = *o.lhv_method;
  if (o.tolerance) j["lhv"]["tolerance"] = *o.tolerance;
  if (o.d_min) j["sweep"]["d_min"] = *o.d_min;
  if (o.d_max) j["sweep"]["d_max"] = *o.d_max;
  if (o.sweep_lp) j["sweep"]["lp"] = true;
  return j;
}

tfbell::RunConfig make_config(const Overrides& o) {
  if (o.config.empty()) {
    nlohmann::json j = nlohmann::json::object();
    j.merge_patch(patch(o));
    return tfbell::parse_config(j);
  }
  return tfbell::load_config(o.config, patch(o));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-bin CGLMP Bell test simulation and analysis"};
  app.require_subcommand(1);
  Overrides o;
  using Command = nlohmann::json (*)(const tfbell::RunConfig&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"simulate", "synthesise a Poisson-sampled JSI", tfbell::cmd_simulate},
      {"ingest", "read a JSI file and convert it to frequency axes", tfbell::cmd_ingest},
      {"wrap", "fit fringes, calibrate phases and wrap into one cell", tfbell::cmd_wrap},
      {"bell", "CGLMP value with bootstrap uncertainty", tfbell::cmd_bell},
      {"lhv", "critical visibility against white noise", tfbell::cmd_lhv},
      {"pvalue", "McDiarmid bound on the local-model p-value", tfbell::cmd_pvalue},
      {"pipeline", "run every stage and write a report", tfbell::run_pipeline},
      {"sweep", "theory and noise tolerance over a range of d", tfbell::run_sweep},
  };
  Command selected = nullptr;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_flags(sub, o);
    sub->callback([&selected, f = fn] { selected = f; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; malformed command lines count as validation errors.
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    const auto config = make_config(o);
    const auto summary = selected(config);
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const tfbell::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const tfbell::ComputationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitComputation;
  } catch (const tfbell::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
