#include "calderon/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Core>

#include "calderon/dtn.hpp"
#include "calderon/errors.hpp"
#include "calderon/gegenbauer.hpp"
#include "calderon/io.hpp"
#include "calderon/mesh.hpp"
#include "calderon/plot.hpp"
#include "json.hpp"

namespace calderon {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string vec_text(const Vec3& v) {
  return "(" + short_number(v.x()) + "," + short_number(v.y()) + "," + short_number(v.z()) + ")";
}

// Typed access to one JSON object with the dotted path used in error messages.
class Node {
 public:
  Node(const json& j, std::string path, const std::string& origin) : j_(j), path_(std::move(path)), origin_(origin) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string field = path_;
    if (!key.empty()) field += (field.empty() ? "" : ".") + key;
    throw ConfigError(origin_ + ": field '" + (field.empty() ? "<root>" : field) + "': " + what);
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) fail(it.key(), "unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const char* key, double def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  int integer(const char* key, int def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& def, int size = -1) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    if (size >= 0 && static_cast<int>(out.size()) != size) fail(key, "expected " + std::to_string(size) + " entries");
    return out;
  }

  Vec3 vec3(const char* key, const Vec3& def) const {
    if (!has(key)) return def;
    const auto v = numbers(key, {}, 3);
    return Vec3(v[0], v[1], v[2]);
  }

  std::optional<Node> child(const char* key) const {
    if (!has(key)) return std::nullopt;
    return Node(j_.at(key), path_.empty() ? key : path_ + "." + key, origin_);
  }

 private:
  const json& j_;
  std::string path_;
  const std::string& origin_;
};

FieldSpec parse_field(const Node& n) {
  n.allow({"type", "value", "c0", "slope", "base", "amplitude", "center", "width"});
  FieldSpec f;
  f.type = n.string("type", "constant");
  if (f.type == "constant") {
    f.value = n.number("value", 1.0);
  } else if (f.type == "affine") {
    f.value = n.number("c0", 1.0);
    f.slope = n.vec3("slope", Vec3::Zero());
  } else if (f.type == "bump") {
    f.value = n.number("base", 1.0);
    f.amplitude = n.number("amplitude", 0.0);
    f.center = n.vec3("center", Vec3::Constant(0.5));
    f.width = n.number("width", 0.1);
    if (!(f.width > 0.0)) n.fail("width", "must be positive");
  } else {
    n.fail("type", "unknown parameter field type '" + f.type + "' (constant, affine, bump)");
  }
  return f;
}

FamilySpec parse_family(const Node& n) {
  n.allow({"template", "k", "imag0", "imag1", "r0", "r1", "i0", "i1", "anisotropy", "imag_eigen", "imag_slope",
           "angle", "twist", "tilt"});
  FamilySpec f;
  f.template_name = n.string("template", f.template_name);
  f.k = n.number("k", 0.0);
  if (f.k < 0.0) n.fail("k", "frequency must be non-negative");
  if (f.template_name == "scalar-times-identity") {
    f.imag0 = n.number("imag0", f.imag0);
    f.imag1 = n.number("imag1", f.imag1);
  } else if (f.template_name == "diagonal-affine") {
    f.r0 = n.numbers("r0", f.r0, 3);
    f.r1 = n.numbers("r1", f.r1, 3);
    f.i0 = n.numbers("i0", f.i0, 3);
    f.i1 = n.numbers("i1", f.i1, 3);
  } else if (f.template_name == "rotated-anisotropic") {
    auto& r = f.rotated;
    r.anisotropy = n.number("anisotropy", r.anisotropy);
    const auto ie = n.numbers("imag_eigen", {r.imag_eigen[0], r.imag_eigen[1], r.imag_eigen[2]}, 3);
    r.imag_eigen = {ie[0], ie[1], ie[2]};
    r.imag_slope = n.number("imag_slope", r.imag_slope);
    r.angle = n.number("angle", r.angle);
    r.twist = n.number("twist", r.twist);
    r.tilt = n.number("tilt", r.tilt);
  } else {
    n.fail("template", "unknown family template '" + f.template_name +
                           "' (scalar-times-identity, diagonal-affine, rotated-anisotropic)");
  }
  return f;
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t* column) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  *column = col;
  return line;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ParameterField a2_for(const ExperimentConfig& c, const ParameterField& a1, double s) {
  return perturbed_field(a1, c.sweep->direction.build(), s);
}

struct Pair {
  ParameterField a2;
  double s = 0.0;
};

std::vector<Pair> pairs_of(const ExperimentConfig& c, const ParameterField& a1) {
  std::vector<Pair> out;
  if (c.sweep) {
    for (double s : c.sweep->s) out.push_back({a2_for(c, a1, s), s});
  } else if (c.a2) {
    out.push_back({c.a2->build(), 0.0});
  } else {
    throw ConfigError("this command needs either parameters.a2 or a sweep block");
  }
  return out;
}

std::shared_ptr<const Mesh> graded_box_mesh(const ExperimentConfig& c) {
  const auto taus = c.geometry.tau_grid();
  const DiscretizationSpec& d = c.discretization;
  Grading g{c.geometry.probe_base(), taus.back() / d.grading_factor, d.h_max, d.growth};
  return std::make_shared<const Mesh>(build_graded_mesh(c.geometry.box, g, c.geometry.sigma));
}

GapOptions gap_options(const ExperimentConfig& c, int threads) {
  GapOptions o;
  o.richardson_levels = c.discretization.richardson_levels;
  o.sign_samples = c.discretization.sign_samples;
  o.seed = c.seed;
  o.threads = threads;
  return o;
}

PlotSpec loglog_plot(const StabilityReport& r) {
  PlotSpec p;
  p.logx = p.logy = true;
  const bool der = r.mode == "derivative";
  p.title = der ? "Normal-derivative gap against DtN gap" : "Coefficient gap against DtN gap";
  p.xlabel = "|Lambda_1 - Lambda_2|_*";
  p.ylabel = der ? "|d_nu (a1 - a2)(x0)|" : "sup |A(x,a1) - A(x,a2)| on Sigma_eta";
  PlotSeries pts{"samples", {}, {}, false, "#1f77b4"};
  for (const auto& e : r.entries) {
    pts.x.push_back(e.rhs);
    pts.y.push_back(e.lhs);
  }
  p.series.push_back(pts);
  if (r.fit && !pts.x.empty()) {
    const auto [lo, hi] = std::minmax_element(pts.x.begin(), pts.x.end());
    PlotSeries fit{"fit, slope " + short_number(r.fit->slope), {}, {}, true, "#d62728"};
    for (double x : {*lo, *hi}) {
      fit.x.push_back(x);
      fit.y.push_back(std::exp(r.fit->intercept) * std::pow(x, r.fit->slope));
    }
    p.series.push_back(fit);
    if (der) {
      // Reference slope delta_1 through the geometric centre of the data.
      double lx = 0, ly = 0;
      for (std::size_t i = 0; i < pts.x.size(); ++i) {
        lx += std::log(pts.x[i]);
        ly += std::log(std::max(pts.y[i], 1e-300));
      }
      lx /= pts.x.size();
      ly /= pts.x.size();
      PlotSeries ref{"delta_1 = " + short_number(r.delta_h), {}, {}, true, "#2ca02c", true};
      for (double x : {*lo, *hi}) {
        ref.x.push_back(x);
        ref.y.push_back(std::exp(ly + r.delta_h * (std::log(x) - lx)));
      }
      p.series.push_back(ref);
    }
  }
  if (r.ratio_spread) p.notes.push_back("ratio spread " + short_number(*r.ratio_spread));
  return p;
}

}  // namespace

ParameterField FieldSpec::build() const {
  ParameterField f;
  if (type == "constant") {
    f = constant_field(value);
  } else if (type == "affine") {
    f = affine_field(value, Point(slope));
  } else if (type == "bump") {
    f = bump_field(value, amplitude, Point(center), width);
  } else {
    throw ConfigError("unknown parameter field type '" + type + "'");
  }
  f.description = describe();
  return f;
}

std::string FieldSpec::describe() const {
  if (type == "constant") return "constant(" + short_number(value) + ")";
  if (type == "affine") return "affine(" + short_number(value) + "," + vec_text(slope) + ")";
  return "bump(" + short_number(value) + "," + short_number(amplitude) + "," + vec_text(center) + "," +
         short_number(width) + ")";
}

AdmittivityFamily FamilySpec::build() const {
  if (template_name == "scalar-times-identity") return scalar_identity_family(3, k, imag0, imag1);
  if (template_name == "diagonal-affine") return diagonal_affine_family(k, r0, r1, i0, i1);
  if (template_name == "rotated-anisotropic") return rotated_anisotropic_family(k, rotated);
  throw ConfigError("unknown family template '" + template_name + "'");
}

Vec3 GeometrySpec::probe_base() const { return x0 ? *x0 : sigma.center(box); }

std::vector<double> GeometrySpec::tau_grid() const {
  const double start = tau_start > 0.0 ? tau_start : eta / 16.0;
  std::vector<double> t;
  for (int j = 0; j < tau_count; ++j) t.push_back(start * std::pow(tau_ratio, j));
  return t;
}

double ExperimentConfig::rho() const { return discretization.rho > 0.0 ? discretization.rho : geometry.eta / 4.0; }

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t col = 0;
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1, &col);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": syntax error");
  }
  ExperimentConfig c;
  c.text = text;
  Node top(root, "", origin);
  top.allow({"seed", "geometry", "family", "apriori", "parameters", "discretization", "sweep", "output"});
  const int seed = top.integer("seed", 1);
  if (seed < 0) top.fail("seed", "must be non-negative");
  c.seed = static_cast<unsigned>(seed);

  if (auto g = top.child("geometry")) {
    g->allow({"box", "sigma", "eta", "x0", "tau"});
    if (auto b = g->child("box")) {
      b->allow({"lo", "hi"});
      c.geometry.box = BoxDomain(b->vec3("lo", Vec3::Zero()), b->vec3("hi", Vec3::Ones()));
    }
    if (auto s = g->child("sigma")) {
      s->allow({"face", "rect"});
      try {
        c.geometry.sigma.face = face_from_name(s->string("face", "z+"));
      } catch (const Error&) {
        s->fail("face", "unknown face name");
      }
      const auto r = s->numbers("rect", {0.2, 0.8, 0.2, 0.8}, 4);
      c.geometry.sigma.rect = {r[0], r[1], r[2], r[3]};
    }
    c.geometry.eta = g->number("eta", c.geometry.eta);
    if (g->has("x0")) c.geometry.x0 = g->vec3("x0", Vec3::Zero());
    if (auto t = g->child("tau")) {
      t->allow({"start", "ratio", "count"});
      c.geometry.tau_start = t->number("start", 0.0);
      c.geometry.tau_ratio = t->number("ratio", 0.5);
      c.geometry.tau_count = t->integer("count", 5);
      if (c.geometry.tau_count < 1) t->fail("count", "must be at least 1");
      if (!(c.geometry.tau_ratio > 0.0 && c.geometry.tau_ratio < 1.0)) t->fail("ratio", "must lie in (0,1)");
    }
  }
  if (auto f = top.child("family")) c.family = parse_family(*f);

  AprioriData& ap = c.apriori;
  ap.tau0 = c.geometry.eta / 8.0;
  if (auto a = top.child("apriori")) {
    a->allow({"p", "lambda", "e1", "e2", "big_e", "dcal", "fcal", "alpha", "r0", "lip", "tau0"});
    ap.p = a->number("p", ap.p);
    ap.lambda = a->number("lambda", ap.lambda);
    ap.e1 = a->number("e1", ap.e1);
    ap.e2 = a->number("e2", ap.e2);
    ap.big_e = a->number("big_e", ap.big_e);
    ap.dcal = a->number("dcal", ap.dcal);
    ap.fcal = a->number("fcal", ap.fcal);
    ap.alpha = a->number("alpha", ap.alpha);
    ap.r0 = a->number("r0", ap.r0);
    ap.lip = a->number("lip", ap.lip);
    ap.tau0 = a->number("tau0", ap.tau0);
  }
  ap.n = 3;
  ap.k = c.family.k;
  ap.eta = c.geometry.eta;
  ap.eta0 = eta0(c.geometry.sigma);
  ap.diam = c.geometry.box.diameter();

  if (auto p = top.child("parameters")) {
    p->allow({"a1", "a2"});
    if (auto a = p->child("a1")) c.a1 = parse_field(*a);
    if (auto a = p->child("a2")) c.a2 = parse_field(*a);
  }
  if (auto d = top.child("discretization")) {
    d->allow({"h", "eta_h", "rho", "m", "derivative_m", "sign_samples", "richardson_levels", "grading_factor",
              "growth", "h_max", "sup_nodes", "estimate_gaps"});
    DiscretizationSpec& s = c.discretization;
    s.h = d->number("h", s.h);
    s.eta_h = d->number("eta_h", s.eta_h);
    s.rho = d->number("rho", s.rho);
    s.m = d->integer("m", s.m);
    s.derivative_m = d->integer("derivative_m", s.derivative_m);
    s.sign_samples = d->integer("sign_samples", s.sign_samples);
    s.richardson_levels = d->integer("richardson_levels", s.richardson_levels);
    s.grading_factor = d->number("grading_factor", s.grading_factor);
    s.growth = d->number("growth", s.growth);
    s.h_max = d->number("h_max", s.h_max);
    s.sup_nodes = d->integer("sup_nodes", s.sup_nodes);
    s.estimate_gaps = d->boolean("estimate_gaps", s.estimate_gaps);
    if (!(s.h > 0.0)) d->fail("h", "must be positive");
    if (!(s.eta_h > 0.0)) d->fail("eta_h", "must be positive");
    if (s.rho < 0.0) d->fail("rho", "must be non-negative");
    if (s.sign_samples < 1) d->fail("sign_samples", "must be at least 1");
    if (s.richardson_levels < 0) d->fail("richardson_levels", "must be non-negative");
    if (!(s.grading_factor > 0.0)) d->fail("grading_factor", "must be positive");
    if (!(s.growth > 1.0)) d->fail("growth", "must exceed 1");
    if (!(s.h_max > 0.0)) d->fail("h_max", "must be positive");
    if (s.sup_nodes < 2) d->fail("sup_nodes", "must be at least 2");
  }
  if (auto s = top.child("sweep")) {
    s->allow({"direction", "s"});
    SweepSpec sw;
    if (auto dir = s->child("direction")) sw.direction = parse_field(*dir);
    else s->fail("direction", "missing");
    sw.s = s->numbers("s", {});
    if (sw.s.empty()) s->fail("s", "needs at least one value");
    c.sweep = sw;
  }
  if (auto o = top.child("output")) {
    o->allow({"dir", "formats"});
    c.output.dir = o->string("dir", c.output.dir);
    if (o->has("formats")) {
      c.output.csv = c.output.json = c.output.svg = false;
      const json& fm = root.at("output").at("formats");
      if (!fm.is_array()) o->fail("formats", "expected an array of strings");
      for (const auto& e : fm) {
        const std::string v = e.is_string() ? e.get<std::string>() : "";
        if (v == "csv") c.output.csv = true;
        else if (v == "json") c.output.json = true;
        else if (v == "svg") c.output.svg = true;
        else o->fail("formats", "entries must be \"csv\", \"json\" or \"svg\"");
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str(), path);
}

std::vector<std::string> config_problems(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (const auto& v : c.apriori.violations()) out.push_back("apriori: " + v);
  const auto& g = c.geometry;
  std::optional<EnlargedDomain> dom;
  try {
    g.sigma.check(g.box);
    const EtaSets sets = build_eta_sets(g.box, g.sigma, g.eta);
    build_probe_path(sets, g.probe_base(), g.tau_grid().front(), g.tau_ratio, g.tau_count, c.apriori.tau0);
    dom = build_enlarged_domain(g.box, g.sigma, g.eta);
  } catch (const Error& e) {
    out.push_back(std::string("geometry: ") + e.what());
  }
  if (c.rho() > g.eta / 4.0 + 1e-15) out.push_back("discretization: rho exceeds eta/4");
  if (g.tau_grid().front() > c.rho() / 2.0 + 1e-15) out.push_back("geometry: tau start exceeds rho/2");
  for (int m : {c.discretization.m, c.discretization.derivative_m})
    if (m < 0 || m > kMaxGegenbauerDegree) out.push_back("discretization: probe order outside [0, 16]");
  if (c.discretization.derivative_m < 1) out.push_back("discretization: derivative_m must be at least 1");
  try {
    build_mesh(g.box, c.discretization.h, g.sigma);
  } catch (const Error& e) {
    out.push_back(std::string("discretization: ") + e.what());
  }

  // Parameter ranges on a grid covering Omega_eta.
  const double lam = c.apriori.lambda;
  Aabb region{g.box.lo, g.box.hi};
  if (dom) region = dom->bounds();
  std::vector<std::pair<std::string, ParameterField>> fields{{"a1", c.a1.build()}};
  if (c.a2) fields.emplace_back("a2", c.a2->build());
  if (c.sweep)
    for (double s : c.sweep->s) fields.emplace_back("a2(s=" + short_number(s) + ")", a2_for(c, fields[0].second, s));
  const int q = 9;
  for (const auto& [name, f] : fields) {
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        for (int k = 0; k < q; ++k) {
          const Vec3 x = region.lo + Vec3(i, j, k).cwiseProduct(region.hi - region.lo) / (q - 1);
          const double v = f(Point(x));
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
    if (lo < 1.0 / lam - 1e-12 || hi > lam + 1e-12)
      out.push_back("parameters: " + name + " takes values in [" + short_number(lo) + ", " + short_number(hi) +
                    "], outside [1/lambda, lambda]");
  }
  return out;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunRecorder::RunRecorder(std::string dir, const ExperimentConfig& config, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)), hash_(config_hash(config.text)), seed_(config.seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory '" + dir_ + "': " + ec.message());
}

void RunRecorder::write(const std::string& name, const std::string& content) {
  write_text_file((std::filesystem::path(dir_) / name).string(), content);
  files_.push_back(name);
}

void RunRecorder::stage(const std::string& name, double seconds) { stages_.emplace_back(name, seconds); }

void RunRecorder::finish() {
  json m;
  m["command"] = command_;
  m["config_hash"] = hash_;
  m["seed"] = seed_;
  m["versions"] = {{"calderon", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", __VERSION__}};
  json t = json::object();
  for (const auto& [k, v] : stages_) t[k] = v;
  m["timings_seconds"] = t;
  std::vector<std::string> all = files_;
  all.push_back("manifest.json");
  m["files"] = all;
  write_text_file((std::filesystem::path(dir_) / "manifest.json").string(), m.dump(2) + "\n");
}

ValidateOutcome run_validate(const ExperimentConfig& c) {
  ValidateOutcome v;
  v.problems = config_problems(c);
  const AdmittivityFamily family = c.family.build();
  Vec3 lo = c.geometry.box.lo, hi = c.geometry.box.hi;
  try {
    const auto b = build_enlarged_domain(c.geometry.box, c.geometry.sigma, c.geometry.eta).bounds();
    lo = b.lo;
    hi = b.hi;
  } catch (const Error&) {
  }
  v.class_h = validate_class_H(family, c.apriori, default_validation_samples(lo, hi, c.apriori.lambda, c.seed));
  v.window = frequency_window_sweep(c.apriori.e1, c.apriori.e2, c.apriori.n);
  v.k_in_window = c.family.k == 0.0 || (!v.window.empty && c.family.k <= v.window.k_max);
  v.passed = v.problems.empty() && v.class_h.passed;
  return v;
}

void require_frequency_window(const ExperimentConfig& c) {
  const FrequencyWindow w = frequency_window_sweep(c.apriori.e1, c.apriori.e2, c.apriori.n);
  if (c.family.k == 0.0 || (!w.empty && c.family.k <= w.k_max)) return;
  throw SignConditionError("refused: k = " + short_number(c.family.k) + " lies outside the frequency window (k_max = " +
                           short_number(w.k_max) + (w.empty ? ", empty window" : "") + ")");
}

DtnOutcome run_dtn(const ExperimentConfig& c, RunRecorder& out, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const AdmittivityFamily family = c.family.build();
  auto mesh = std::make_shared<const Mesh>(build_mesh(c.geometry.box, c.discretization.h, c.geometry.sigma));
  ForwardModel m1(mesh, family, c.a1.build());
  const LocalDtnMatrix l1 = assemble_dtn(m1, threads);
  out.stage("dtn_a1", seconds_since(t0));
  DtnOutcome r;
  r.basis_size = l1.basis.count();
  auto emit = [&](const LocalDtnMatrix& l, const std::string& tag) {
    if (!c.output.csv) return;
    CsvWriter p({"i", "j", "vertex_i", "vertex_j", "re", "im"});
    CsvWriter g({"i", "j", "vertex_i", "vertex_j", "value"});
    for (int i = 0; i < l.basis.count(); ++i)
      for (int j = 0; j < l.basis.count(); ++j) {
        const std::vector<std::string> key{std::to_string(i), std::to_string(j), std::to_string(l.basis.vertices[i]),
                                           std::to_string(l.basis.vertices[j])};
        auto row = key;
        row.push_back(format_number(l.pairing(i, j).real()));
        row.push_back(format_number(l.pairing(i, j).imag()));
        p.add_row(row);
        row = key;
        row.push_back(format_number(l.gram(i, j)));
        g.add_row(row);
      }
    out.write("dtn_" + tag + "_pairing.csv", p.str());
    out.write("dtn_" + tag + "_gram.csv", g.str());
  };
  emit(l1, "a1");
  if (c.a2) {
    const auto t1 = std::chrono::steady_clock::now();
    ForwardModel m2(mesh, family, c.a2->build());
    const LocalDtnMatrix l2 = assemble_dtn(m2, l1.basis, l1.gram, threads);
    out.stage("dtn_a2", seconds_since(t1));
    emit(l2, "a2");
    r.difference_norm = dtn_star_norm(l1, l2);
    if (c.output.csv) {
      CsvWriter d({"basis_size", "star_norm"});
      d.add_row({std::to_string(r.basis_size), format_number(*r.difference_norm)});
      out.write("dtn_difference.csv", d.str());
    }
  }
  return r;
}

void run_probe(const ExperimentConfig& c, RunRecorder& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const AdmittivityFamily family = c.family.build();
  const ParameterField a1 = c.a1.build();
  const auto& g = c.geometry;
  const EnlargedDomain dom = build_enlarged_domain(g.box, g.sigma, g.eta);
  auto eta_mesh = std::make_shared<const Mesh>(build_mesh(dom, c.discretization.eta_h));
  ForwardModel eta_model(eta_mesh, family, a1);
  const Vec3 x0 = g.probe_base();
  const Vec3 nu = g.box.outward_normal(g.sigma.face);
  CsvWriter csv({"tau", "z_x", "z_y", "z_z", "m", "sphere_min_h", "sphere_min_nonvanishing", "lead_re", "lead_im",
                 "corrector_re", "corrector_im"});
  for (double tau : g.tau_grid()) {
    const Vec3 z = x0 + tau * nu;
    const SingularProbe p = make_probe(family, a1, Point(z), c.discretization.m);
    const CorrectedProbe cp = build_corrected_probe(p, dom, eta_model);
    const cdouble lead = leading_term(p, Point(x0));
    const cdouble corr = cp.corrector_at(x0);
    csv.add_numbers({tau, z.x(), z.y(), z.z(), static_cast<double>(p.m), sphere_min_h(p, 2000),
                     sphere_min_nonvanishing(p, 2000), lead.real(), lead.imag(), corr.real(), corr.imag()});
  }
  out.stage("probes", seconds_since(t0));
  if (c.output.csv) out.write("probes.csv", csv.str());
}

StabilityReport run_stability(const ExperimentConfig& c, RunRecorder& out, int threads, bool derivative) {
  require_frequency_window(c);
  const AdmittivityFamily family = c.family.build();
  const ParameterField a1 = c.a1.build();
  const auto& g = c.geometry;
  const auto pairs = pairs_of(c, a1);
  const EtaSets sets = build_eta_sets(g.box, g.sigma, g.eta);

  auto t0 = std::chrono::steady_clock::now();
  auto mesh = std::make_shared<const Mesh>(build_mesh(g.box, c.discretization.h, g.sigma));
  ForwardModel m1(mesh, family, a1);
  const LocalDtnMatrix l1 = assemble_dtn(m1, threads);
  out.stage("dtn_reference", seconds_since(t0));

  const bool estimate = derivative || c.discretization.estimate_gaps;
  std::optional<EnlargedDomain> dom;
  std::shared_ptr<const Mesh> box_fine, eta_mesh;
  std::shared_ptr<const ForwardModel> fine1, eta1;
  if (estimate) {
    t0 = std::chrono::steady_clock::now();
    dom = build_enlarged_domain(g.box, g.sigma, g.eta);
    box_fine = graded_box_mesh(c);
    eta_mesh = std::make_shared<const Mesh>(build_mesh(*dom, c.discretization.eta_h));
    fine1 = std::make_shared<ForwardModel>(box_fine, family, a1);
    eta1 = std::make_shared<ForwardModel>(eta_mesh, family, a1);
    out.stage("estimator_setup", seconds_since(t0));
  }

  StabilityReport report;
  report.mode = derivative ? "derivative" : "boundary";
  report.h = derivative ? 1 : 0;
  report.delta_h = delta_h(c.apriori.alpha, report.h);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    t0 = std::chrono::steady_clock::now();
    ForwardModel m2(mesh, family, pairs[i].a2);
    const LocalDtnMatrix l2 = assemble_dtn(m2, l1.basis, l1.gram, threads);
    StabilityEntry e = lipschitz_ratio(family, a1, pairs[i].a2, sets, l1, l2, c.discretization.sup_nodes);
    e.s = pairs[i].s;
    if (estimate) {
      GapSetup setup{*dom, fine1, std::make_shared<ForwardModel>(box_fine, family, pairs[i].a2), eta1,
                     std::make_shared<ForwardModel>(eta_mesh, family, pairs[i].a2)};
      const auto taus = g.tau_grid();
      const GapEstimate est =
          derivative ? derivative_gap_estimate(setup, g.probe_base(), taus, c.discretization.derivative_m, c.rho(), 0.0,
                                               gap_options(c, threads))
                     : boundary_gap_estimate(setup, g.probe_base(), taus, 0, c.rho(), gap_options(c, threads));
      e.gap_estimate = est.value;
      if (derivative) {
        e.lhs = std::abs(est.value);
        e.ratio.reset();
        if (e.rhs > 0.0) e.ratio = e.lhs / e.rhs;
        e.violation = e.rhs == 0.0 && e.lhs > 0.0;
      }
    }
    report.entries.push_back(e);
    out.stage("pair_" + std::to_string(i), seconds_since(t0));
  }
  finalize_report(report);
  const std::string base = derivative ? "derivative" : "stability";
  if (c.output.json) out.write(base + ".json", stability_json(report));
  if (c.output.csv) out.write(base + ".csv", stability_csv(report));
  if (c.output.svg && report.entries.size() >= 2) out.write(base + ".svg", render_svg(loglog_plot(report)));
  return report;
}

GapEstimate run_gap_sweep(const ExperimentConfig& c, RunRecorder& out, int threads) {
  require_frequency_window(c);
  if (!c.a2) throw ConfigError("the sweep command needs parameters.a2");
  const auto& g = c.geometry;
  const AdmittivityFamily family = c.family.build();
  auto t0 = std::chrono::steady_clock::now();
  const EnlargedDomain dom = build_enlarged_domain(g.box, g.sigma, g.eta);
  auto box_fine = graded_box_mesh(c);
  auto eta_mesh = std::make_shared<const Mesh>(build_mesh(dom, c.discretization.eta_h));
  const GapSetup setup = make_gap_setup(dom, box_fine, eta_mesh, family, c.a1.build(), c.a2->build());
  out.stage("setup", seconds_since(t0));
  t0 = std::chrono::steady_clock::now();
  const int m = c.discretization.m;
  const GapEstimate est = m == 0 ? boundary_gap_estimate(setup, g.probe_base(), g.tau_grid(), 0, c.rho(),
                                                         gap_options(c, threads))
                                 : derivative_gap_estimate(setup, g.probe_base(), g.tau_grid(), m, c.rho(), 0.0,
                                                           gap_options(c, threads));
  out.stage("estimate", seconds_since(t0));

  if (c.output.csv) {
    CsvWriter per({"tau", "z_x", "z_y", "z_z", "pairing_re", "pairing_im", "normalization", "estimate",
                   "sign_real_margin", "sign_imag_margin"});
    for (const auto& r : est.per_tau)
      per.add_numbers({r.tau, r.z.x(), r.z.y(), r.z.z(), r.pairing.real(), r.pairing.imag(), r.normalization,
                       r.estimate, r.sign.worst_real_margin, r.sign.worst_imag_margin});
    out.write("gap_tau.csv", per.str());
    CsvWriter tab({"row", "level", "value"});
    for (std::size_t j = 0; j < est.extrapolation.table.size(); ++j)
      for (std::size_t l = 0; l < est.extrapolation.table[j].size(); ++l)
        tab.add_numbers({static_cast<double>(j), static_cast<double>(l), est.extrapolation.table[j][l]});
    out.write("richardson.csv", tab.str());
  }
  if (c.output.json) {
    json j;
    j["schema"] = "gap-estimate/1";
    j["m"] = est.m;
    j["quantity"] = m == 0 ? "(a1-a2)(x0)" : "d_nu(a1-a2)(x0)";
    j["rho"] = est.rho;
    j["value"] = est.value;
    j["residual"] = est.residual;
    j["richardson_levels"] = c.discretization.richardson_levels;
    json rows = json::array();
    for (const auto& r : est.per_tau)
      rows.push_back({{"tau", r.tau}, {"estimate", r.estimate}, {"pairing", {r.pairing.real(), r.pairing.imag()}},
                      {"normalization", r.normalization}, {"sign_passed", r.sign.passed},
                      {"sign_degenerate", r.sign.degenerate}});
    j["per_tau"] = rows;
    out.write("gap.json", j.dump(2) + "\n");
  }
  if (c.output.svg) {
    PlotSpec p;
    p.title = "Gap estimate against probe depth";
    p.xlabel = "tau";
    p.ylabel = "estimate";
    p.logx = true;
    PlotSeries s{"estimate(tau)", {}, {}, false, "#1f77b4"};
    for (const auto& r : est.per_tau) {
      s.x.push_back(r.tau);
      s.y.push_back(r.estimate);
    }
    PlotSeries lim{"extrapolated " + short_number(est.value), {s.x.back(), s.x.front()}, {est.value, est.value}, true,
                   "#d62728", true};
    p.series = {s, lim};
    p.notes.push_back("residual " + short_number(est.residual));
    out.write("gap_tau.svg", render_svg(p));
  }
  return est;
}

std::string stability_json(const StabilityReport& r) {
  json j;
  j["schema"] = "stability-report/1";
  j["mode"] = r.mode;
  j["h"] = r.h;
  j["delta_h"] = r.delta_h;
  json entries = json::array();
  for (const auto& e : r.entries) {
    json x{{"a1", e.a1}, {"a2", e.a2}, {"s", e.s}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"violation", e.violation}};
    x["ratio"] = e.ratio ? json(*e.ratio) : json(nullptr);
    x["gap_estimate"] = e.gap_estimate ? json(*e.gap_estimate) : json(nullptr);
    entries.push_back(x);
  }
  j["entries"] = entries;
  j["fit"] = r.fit ? json{{"slope", r.fit->slope}, {"intercept", r.fit->intercept}, {"r2", r.fit->r2}} : json(nullptr);
  j["ratio_spread"] = r.ratio_spread ? json(*r.ratio_spread) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string stability_csv(const StabilityReport& r) {
  CsvWriter w({"s", "a1", "a2", "lhs", "rhs", "ratio", "violation", "gap_estimate"});
  for (const auto& e : r.entries)
    w.add_row({format_number(e.s), e.a1, e.a2, format_number(e.lhs), format_number(e.rhs),
               e.ratio ? format_number(*e.ratio) : "", e.violation ? "true" : "false",
               e.gap_estimate ? format_number(*e.gap_estimate) : ""});
  return w.str();
}

}  // namespace calderon
