// Command-line front end: synthesize, invert, evaluate, render.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "csi/io.hpp"

namespace {

enum ExitCode {
  kOk = 0,
  kError = 1,
  kInverseCrime = 2,
  kStepFailure = 3,
  kDivergence = 4,
  kNumericalFailure = 5,
};

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("--snr-db: not a number: " + s);
  return v;
}

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string snr;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool strict = false;
};

csi::ExperimentConfig load_config(const CommonOptions& o) {
  csi::ExperimentConfig c =
      o.config_path.empty() ? csi::experiment_preset(o.preset.empty() ? "coaxial" : o.preset)
                            : csi::read_config(o.config_path);
  if (!o.config_path.empty() && !o.preset.empty() && o.preset != c.preset) {
    // A preset on the command line replaces the solver parameters and phantom.
    const csi::ExperimentConfig p = csi::experiment_preset(o.preset);
    c.preset = p.preset;
    c.phantom = p.phantom;
    c.solver = p.solver;
  }
  if (!o.snr.empty()) c.snr_db = parse_snr(o.snr);
  if (o.seed_set) c.seed = o.seed;
  return c;
}

// Returns false when the run must stop.
bool check_inverse_crime(const csi::ExperimentConfig& c, bool strict) {
  if (!c.inverse_crime()) return true;
  std::fprintf(stderr, "%s: synthesis grid (n=%d) is not finer than the inversion grid (n=%d); inverse crime\n",
               strict ? "error" : "warning", c.synthesis.n, c.inversion.n);
  return !strict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrast-source microwave imaging: synthesis and sparse reconstruction"};
  app.require_subcommand(1);

  CommonOptions common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Experiment configuration (JSON)");
    sub->add_option("--preset", common.preset, "Named experiment")
        ->check(CLI::IsMember({"coaxial", "austria", "lossy-austria"}));
    sub->add_option("--snr-db", common.snr, "Measurement SNR in dB, or inf");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { common.seed = s, common.seed_set = true; }, "Noise seed");
    sub->add_flag("--strict", common.strict, "Treat an inverse-crime configuration as an error");
  };

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Generate a measurement set");
  add_common(synth);
  std::string out_path;
  synth->add_option("--out", out_path, "Measurement set output (JSON)")->required();
  std::string reference_path;
  synth->add_option("--reference", reference_path, "Also write the reference contrast on the synthesis grid (CSV)");

  // invert
  auto* inv = app.add_subcommand("invert", "Reconstruct the contrast from a measurement set");
  add_common(inv);
  std::string measurements_path, trace_path, algo;
  int max_iters = -1;
  double time_budget = -1.0, l1 = -1.0, oracle_scale = -1.0;
  bool no_reference = false;
  inv->add_option("measurements", measurements_path, "Measurement set (JSON)")->required();
  inv->add_option("--out", out_path, "Reconstructed contrast (CSV)")->required();
  inv->add_option("--trace", trace_path, "Iteration trace (CSV)");
  inv->add_option("--algo", algo, "Solver")->check(CLI::IsMember({"apasd", "nlw"}));
  inv->add_option("--max-iters", max_iters, "Outer iteration limit")->check(CLI::NonNegativeNumber);
  inv->add_option("--time-budget-s", time_budget, "Wall-time budget in seconds")->check(CLI::PositiveNumber);
  inv->add_option("--l1", l1, "l1-ball radius")->check(CLI::PositiveNumber);
  inv->add_option("--oracle-l1-scale", oracle_scale, "Scale c of the oracle radius")->check(CLI::PositiveNumber);
  inv->add_flag("--no-reference", no_reference, "Leave the err column empty");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Relative L2 error of a reconstruction");
  std::string recon_path, ref_path;
  double extent = 7.5;
  eval->add_option("reconstruction", recon_path, "Contrast map (CSV)")->required();
  eval->add_option("reference", ref_path, "Reference contrast map (CSV)")->required();
  eval->add_option("--extent", extent, "Domain side length in metres")->check(CLI::PositiveNumber);

  // render
  auto* render = app.add_subcommand("render", "Write a contrast map as a PGM image");
  std::string map_path, part = "real";
  render->add_option("map", map_path, "Contrast map (CSV)")->required();
  render->add_option("--out", out_path, "Image output (PGM)")->required();
  render->add_option("--part", part, "Which part to render")->check(CLI::IsMember({"real", "imag", "abs"}));
  render->add_option("--extent", extent, "Domain side length in metres")->check(CLI::PositiveNumber);

  // config
  auto* dump = app.add_subcommand("config", "Print the configuration a preset expands to");
  add_common(dump);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto c = load_config(common);
      if (!check_inverse_crime(c, common.strict)) return kInverseCrime;
      csi::write_measurements(out_path, csi::synthesize_experiment(c));
      if (!reference_path.empty()) {
        csi::write_contrast_csv(reference_path, csi::rasterize_phantom(c.phantom, c.synthesis_grid()));
      }
      return kOk;
    }
    if (*dump) {
      csi::write_config(std::cout, load_config(common));
      return kOk;
    }
    if (*inv) {
      auto c = load_config(common);
      if (!check_inverse_crime(c, common.strict)) return kInverseCrime;
      if (!algo.empty()) c.algorithm = csi::algorithm_from_string(algo);
      if (max_iters >= 0) c.solver.max_iterations = max_iters;
      if (time_budget > 0) c.solver.time_budget_s = time_budget;
      if (l1 > 0) c.l1 = l1;
      if (oracle_scale > 0) c.oracle_l1_scale = oracle_scale;
      if (!c.l1) std::fprintf(stderr, "l1 radius: oracle with c = %.6g\n", c.oracle_l1_scale);

      const auto ms = csi::read_measurements(measurements_path);
      const auto result = csi::run_inversion(c, ms, !no_reference);
      csi::write_contrast_csv(out_path, result.contrast);
      if (!trace_path.empty()) csi::write_trace_csv(trace_path, result.trace);

      const auto& last = result.trace.records.back();
      std::fprintf(stderr, "stop: %s after %d iterations, misfit %.6g, err %.6g\n",
                   csi::to_string(result.reason).c_str(), last.k, last.misfit, last.err);
      switch (result.reason) {
        case csi::StopReason::step_failure:
          std::fprintf(stderr, "%s\n", result.diagnostic.c_str());
          return kStepFailure;
        case csi::StopReason::divergence:
          std::fprintf(stderr, "%s\n", result.diagnostic.c_str());
          return kDivergence;
        case csi::StopReason::numerical_failure:
          std::fprintf(stderr, "%s\n", result.diagnostic.c_str());
          return kNumericalFailure;
        default:
          return kOk;
      }
    }
    if (*eval) {
      const auto recon = csi::read_contrast_csv(recon_path, extent);
      const auto ref = csi::read_contrast_csv(ref_path, extent);
      std::printf("%.9g\n", csi::reconstruction_error(recon, ref));
      return kOk;
    }
    if (*render) {
      csi::write_pgm(out_path, csi::read_contrast_csv(map_path, extent), csi::map_part_from_string(part));
      return kOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kOk;
}
