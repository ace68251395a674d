#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calderon/admittivity.hpp"
#include "calderon/estimator.hpp"
#include "calderon/geometry.hpp"

namespace calderon {

struct FieldSpec {
  std::string type = "constant";  // constant | affine | bump
  double value = 1.0;             // constant value, affine offset or bump base
  Vec3 slope = Vec3::Zero();
  double amplitude = 0.0;
  Vec3 center = Vec3::Zero();
  double width = 1.0;

  ParameterField build() const;
  std::string describe() const;
};

struct FamilySpec {
  std::string template_name = "scalar-times-identity";
  double k = 0.0;
  double imag0 = 1.0;  // scalar template: A_I = (imag0 + imag1 t) I
  double imag1 = 0.0;
  std::vector<double> r0{0, 0, 0}, r1{1, 1, 1}, i0{1, 1, 1}, i1{0, 0, 0};  // diagonal-affine
  RotatedAnisotropicParams rotated;

  AdmittivityFamily build() const;
};

struct GeometrySpec {
  BoxDomain box;
  BoundaryPatch sigma{Face::ZHi, {0.2, 0.8, 0.2, 0.8}};
  double eta = 0.25;
  std::optional<Vec3> x0;  // defaults to the centre of Sigma
  double tau_start = 0.0;  // 0 selects eta / 16
  double tau_ratio = 0.5;
  int tau_count = 5;

  Vec3 probe_base() const;
  std::vector<double> tau_grid() const;
};

struct DiscretizationSpec {
  double h = 0.0625;       // uniform mesh of the box for DtN matrices
  double eta_h = 0.03125;  // uniform mesh of Omega_eta for correctors
  double rho = 0.0;        // 0 selects eta / 4
  int m = 0;
  int derivative_m = 2;
  int sign_samples = 1000;
  int richardson_levels = 2;
  double grading_factor = 16.0;  // h_min = smallest tau / grading_factor
  double growth = 1.25;
  double h_max = 0.1;
  int sup_nodes = 21;
  bool estimate_gaps = false;  // boundary gap estimates inside the stability sweep
};

struct SweepSpec {
  FieldSpec direction;   // a2(s) = a1 + s * direction
  std::vector<double> s;
};

struct OutputSpec {
  std::string dir = "out";
  bool csv = true;
  bool json = true;
  bool svg = true;
};

struct ExperimentConfig {
  unsigned seed = 1;
  GeometrySpec geometry;
  FamilySpec family;
  AprioriData apriori;
  FieldSpec a1;
  std::optional<FieldSpec> a2;
  DiscretizationSpec discretization;
  std::optional<SweepSpec> sweep;
  OutputSpec output;
  std::string text;  // raw config, hashed into the manifest

  double rho() const;
};

// Throws ConfigError naming the field (or the line and column of a syntax error).
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
// Throws IoError when the file cannot be read.
ExperimentConfig load_config(const std::string& path);

// Cross-validation of the config against the module preconditions, without solving.
std::vector<std::string> config_problems(const ExperimentConfig& config);

std::string config_hash(const std::string& text);

// Records every file written during a run and the wall-clock time of each stage.
class RunRecorder {
 public:
  RunRecorder(std::string dir, const ExperimentConfig& config, std::string command);
  void write(const std::string& name, const std::string& content);
  void stage(const std::string& name, double seconds);
  const std::vector<std::string>& files() const { return files_; }
  // Writes manifest.json; it lists itself last.
  void finish();

 private:
  std::string dir_;
  std::string command_;
  std::string hash_;
  unsigned seed_;
  std::vector<std::string> files_;
  std::vector<std::pair<std::string, double>> stages_;
};

struct ValidateOutcome {
  ValidationReport class_h;
  FrequencyWindow window;
  bool k_in_window = false;
  std::vector<std::string> problems;
  bool passed = false;
};

ValidateOutcome run_validate(const ExperimentConfig& config);

struct DtnOutcome {
  int basis_size = 0;
  std::optional<double> difference_norm;
};

DtnOutcome run_dtn(const ExperimentConfig& config, RunRecorder& out, int threads);

void run_probe(const ExperimentConfig& config, RunRecorder& out);

// Lipschitz or Hoelder sweep; derivative mode replaces lhs by the recovered normal derivative.
StabilityReport run_stability(const ExperimentConfig& config, RunRecorder& out, int threads, bool derivative);

GapEstimate run_gap_sweep(const ExperimentConfig& config, RunRecorder& out, int threads);

// Throws SignConditionError when k lies outside the frequency window.
void require_frequency_window(const ExperimentConfig& config);

std::string stability_json(const StabilityReport& report);
std::string stability_csv(const StabilityReport& report);

}  // namespace calderon
