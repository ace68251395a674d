#include "calderon/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "calderon/errors.hpp"
#include "calderon/experiment.hpp"

namespace calderon {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
  return buf;
}

struct Flags {
  std::string config;
  std::string out_dir;
  int threads = 1;
  std::optional<unsigned> seed;
  std::optional<double> mesh_h;
};

ExperimentConfig prepare(const Flags& f) {
  ExperimentConfig c = load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.mesh_h) {
    if (!(*f.mesh_h > 0.0)) throw ConfigError("--mesh-h must be positive");
    c.discretization.h = *f.mesh_h;
  }
  if (!f.out_dir.empty()) c.output.dir = f.out_dir;
  const auto problems = config_problems(c);
  if (!problems.empty()) {
    std::string msg = "config rejected:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return c;
}

int cmd_validate(const Flags& f, std::ostream& out) {
  ExperimentConfig c = load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.mesh_h) c.discretization.h = *f.mesh_h;
  const ValidateOutcome v = run_validate(c);
  for (const auto& cond : v.class_h.conditions) {
    const bool other_branch = (cond.name == "AI1 assump" || cond.name == "AI2 assump") &&
                              cond.name.substr(0, 3) != v.class_h.imag_branch;
    out << (other_branch ? "n/a  " : cond.passed ? "ok   " : "FAIL ") << cond.name << "  worst margin " << num(cond.worst_margin)
        << (cond.detail.empty() ? "" : "  (" + cond.detail + ")") << "\n";
  }
  out << "imaginary part branch: " << v.class_h.imag_branch << "\n";
  out << "frequency window: k_max = " << num(v.window.k_max) << (v.window.empty ? " (empty)" : "")
      << " at partition (" << num(v.window.partition.a) << ", " << num(v.window.partition.b) << ", "
      << num(v.window.partition.c) << ")\n";
  if (!v.k_in_window)
    out << "warning: k = " << num(c.family.k)
        << " lies outside the frequency window; stability, derivative and sweep will refuse to run\n";
  for (const auto& p : v.problems) out << "FAIL " << p << "\n";
  out << (v.passed ? "validation passed" : "validation failed") << "\n";
  return v.passed ? kExitOk : kExitValidation;
}

int cmd_dtn(const Flags& f, std::ostream& out) {
  const ExperimentConfig c = prepare(f);
  RunRecorder rec(c.output.dir, c, "dtn");
  const DtnOutcome r = run_dtn(c, rec, f.threads);
  out << "basis size " << r.basis_size << "\n";
  if (r.difference_norm) out << "|Lambda_1 - Lambda_2|_* = " << num(*r.difference_norm) << "\n";
  rec.finish();
  return kExitOk;
}

int cmd_probe(const Flags& f, std::ostream& out) {
  const ExperimentConfig c = prepare(f);
  RunRecorder rec(c.output.dir, c, "probe");
  run_probe(c, rec);
  rec.finish();
  out << "probe table written to " << c.output.dir << "\n";
  return kExitOk;
}

int cmd_stability(const Flags& f, std::ostream& out, bool derivative) {
  const ExperimentConfig c = prepare(f);
  RunRecorder rec(c.output.dir, c, derivative ? "derivative" : "stability");
  const StabilityReport r = run_stability(c, rec, f.threads, derivative);
  for (const auto& e : r.entries) {
    out << "s = " << num(e.s) << "  lhs = " << num(e.lhs) << "  rhs = " << num(e.rhs);
    if (e.ratio) out << "  ratio = " << num(*e.ratio);
    if (e.gap_estimate) out << "  estimate = " << num(*e.gap_estimate);
    if (e.violation) out << "  STABILITY VIOLATION";
    out << "\n";
  }
  if (r.fit) out << "log-log slope " << num(r.fit->slope) << " (r^2 " << num(r.fit->r2) << ")\n";
  if (r.ratio_spread) out << "ratio spread " << num(*r.ratio_spread) << "\n";
  if (derivative) out << "delta_1 = " << num(r.delta_h) << "\n";
  rec.finish();
  for (const auto& e : r.entries)
    if (e.violation) return kExitNumeric;
  return kExitOk;
}

int cmd_sweep(const Flags& f, std::ostream& out) {
  const ExperimentConfig c = prepare(f);
  RunRecorder rec(c.output.dir, c, "sweep");
  const GapEstimate e = run_gap_sweep(c, rec, f.threads);
  for (const auto& r : e.per_tau) out << "tau = " << num(r.tau) << "  estimate = " << num(r.estimate) << "\n";
  out << "extrapolated " << num(e.value) << "  residual " << num(e.residual) << "\n";
  rec.finish();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boundary stability laboratory for the complex anisotropic Calderon problem", "calderon_lab"};
  app.require_subcommand(1, 1);
  Flags flags;
  std::optional<long long> seed;
  std::optional<double> mesh_h;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "experiment config (JSON)")->required();
    sub->add_option("--out", flags.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed (overrides the config)")->check(CLI::NonNegativeNumber);
    sub->add_option("--mesh-h", mesh_h, "uniform mesh size (overrides discretization.h)");
  };
  const std::vector<std::pair<std::string, std::string>> commands{
      {"validate", "check class membership, frequency window and geometry"},
      {"dtn", "assemble local DtN matrices and write them as CSV"},
      {"probe", "tabulate singular probes along the probe path"},
      {"stability", "Lipschitz sweep of coefficient gap against DtN gap"},
      {"derivative", "Hoelder sweep of the recovered normal derivative"},
      {"sweep", "gap estimate against probe depth with extrapolation"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed) flags.seed = static_cast<unsigned>(*seed);
  flags.mesh_h = mesh_h;
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "validate") return cmd_validate(flags, out);
    if (cmd == "dtn") return cmd_dtn(flags, out);
    if (cmd == "probe") return cmd_probe(flags, out);
    if (cmd == "stability") return cmd_stability(flags, out, false);
    if (cmd == "derivative") return cmd_stability(flags, out, true);
    return cmd_sweep(flags, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const SolverError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const SingularityError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace calderon
