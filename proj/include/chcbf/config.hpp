#pragma once

// Run configuration: INI text with sections domain, params, potential,
// noise.velocity, noise.nutrient, sources, stepper, experiment.  ';' starts
// a comment.  Numbers are parsed with from_chars, so the C locale never
// matters.  Unknown sections and keys are rejected.

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chcbf/errors.hpp"
#include "chcbf/model.hpp"
#include "chcbf/random_fields.hpp"
#include "chcbf/spectral_basis.hpp"
#include "chcbf/stepper.hpp"

namespace chcbf {

inline constexpr const char* code_version = "0.1.0";

/// How the initial state is built.
struct InitialSpec {
  std::string kind = "smooth";  // smooth | random | snapshot
  double amplitude = 1.0;       // scales the smooth preset or the random spectrum
  double decay = 3.0;
  std::uint64_t seed = 1;
  std::string path;             // snapshot file
};

struct ExperimentSpec {
  std::uint64_t seed = 0;
  std::size_t paths = 64;
  std::vector<int> modes;          // galerkin-convergence resolutions
  std::vector<double> p_list{2.0, 4.0};
  std::vector<double> r_list{1.0, 2.0, 3.0};
  double delta = 1e-6;
  std::size_t operator_samples = 100;
  std::string out = "out";
  InitialSpec initial;
};

struct RunConfig {
  DomainSpec domain{2, 2.0 * std::numbers::pi, 32};
  Model model;
  StepperConfig stepper;
  double T = 1.0;
  std::size_t snapshot_interval = 0;  // steps between snapshots, 0 = initial and final
  double M = 1e3;
  double w_value = 1.0;     // constant vasculature nutrient
  double z_amplitude = 0.0; // constant shear force z_amplitude (0, cos(2 pi x / L))
  DosageSchedule u = DosageSchedule::constant(0.0);
  ExperimentSpec experiment;
  std::vector<std::string> warnings;
  std::string hash;  // SHA-256 of the config bytes
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, const std::string& text) {
  const auto t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || t.empty()) throw ConfigError(field, "expected a number, got '" + t + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& field, const std::string& text) {
  const auto t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(field, "expected a nonnegative integer, got '" + t + "'");
  return v;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "off" || t == "no" || t == "0") return false;
  throw ConfigError(field, "expected true/false, got '" + t + "'");
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);)
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

/// "u" accepts a number, the presets none / full, or "t0:u0, t1:u1, ...".
inline DosageSchedule parse_dosage(const std::string& field, const std::string& text) {
  const auto t = trim(text);
  DosageSchedule s;
  if (t == "none") return DosageSchedule::constant(0.0);
  if (t == "full") return DosageSchedule::constant(1.0);
  if (t.find(':') == std::string::npos) {
    s = DosageSchedule::constant(parse_double(field, t));
  } else {
    s.times.clear();
    s.values.clear();
    for (const auto& item : split(t, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError(field, "schedule entries must be time:value");
      s.times.push_back(parse_double(field, item.substr(0, colon)));
      s.values.push_back(parse_double(field, item.substr(colon + 1)));
    }
  }
  if (!s.valid() || s.times.front() != 0.0) throw ConfigError(field, "dosage must lie in [0, 1] with increasing times starting at 0");
  return s;
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

/// Key reader over one section; remembers which keys were consumed.
class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    for (const auto& [k, v] : *tree_)
      if (k == key) return v.data();
    return std::nullopt;
  }
  std::string field(const std::string& key) const { return name_ + "." + key; }

  void num(const std::string& key, double& out) {
    if (auto r = raw(key)) out = parse_double(field(key), *r);
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (auto r = raw(key)) out = Int(parse_uint(field(key), *r));
  }
  void flag(const std::string& key, bool& out) {
    if (auto r = raw(key)) out = parse_bool(field(key), *r);
  }
  void text(const std::string& key, std::string& out) {
    if (auto r = raw(key)) out = trim(*r);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_)
      if (!used_.count(k)) throw ConfigError(field(k), "unknown key");
  }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
  std::set<std::string> used_;
};

}  // namespace detail

/// Parse and validate.  Throws ConfigError naming the offending field.
inline RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  {
    std::istringstream is(text);
    try {
      pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("", "line " + std::to_string(e.line()) + ": " + e.message());
    }
  }
  static const std::set<std::string> known{"domain",  "params",  "potential", "noise.velocity",
                                           "noise.nutrient", "sources", "stepper",   "experiment"};
  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, sub] : tree) {
    if (!known.count(name)) throw ConfigError(name, "unknown section");
    sections[name] = &sub;
  }
  auto section = [&](const std::string& name) {
    auto it = sections.find(name);
    return detail::Section(name, it == sections.end() ? nullptr : it->second);
  };

  RunConfig cfg;
  cfg.hash = detail::sha256_hex(text);

  auto dom = section("domain");
  dom.integer("dim", cfg.domain.dim);
  dom.integer("modes", cfg.domain.modes_per_axis);
  dom.num("side_length", cfg.domain.side_length);
  dom.reject_unknown();
  try {
    cfg.domain.validate();
  } catch (const ValidationError& e) {
    throw ConfigError("domain", e.what());
  }

  auto& prm = cfg.model.params;
  auto par = section("params");
  par.num("nu", prm.nu);
  par.num("eta", prm.eta);
  par.num("epsilon", prm.epsilon);
  par.num("P", prm.P);
  par.num("A", prm.A);
  par.num("alpha", prm.alpha);
  par.num("c", prm.c);
  par.num("b", prm.b);
  par.num("r", prm.r);
  par.reject_unknown();
  if (auto bad = prm.first_invalid(); !bad.empty()) throw ConfigError("params." + bad, "must be strictly positive (r >= 1)");
  if (cfg.domain.dim == 3 && prm.r > 3.0)
    cfg.warnings.push_back("params.r: r > 3 in d = 3 lies outside the strong-solution theory");

  auto pot = section("potential");
  std::string kind = "double_well", prolif = "smoothstep";
  pot.text("kind", kind);
  pot.text("proliferation", prolif);
  if (kind != "double_well") throw ConfigError("potential.kind", "only double_well is available");
  if (prolif != "smoothstep") throw ConfigError("potential.proliferation", "only smoothstep is available");
  pot.num("R1", cfg.model.potential.R1);
  pot.num("R2", cfg.model.potential.R2);
  pot.num("R3", cfg.model.potential.R3);
  pot.num("C_psi", cfg.model.potential.C_psi);
  pot.num("c_low", cfg.model.potential.c_low);
  pot.num("c_offset", cfg.model.potential.c_offset);
  pot.reject_unknown();
  if (auto rep = validate_assumptions(cfg.model.potential, default_potential_samples()); !rep.passed())
    throw ConfigError("potential", rep.summary());

  for (auto [name, spec] : {std::pair{"noise.velocity", &cfg.model.noise_v}, std::pair{"noise.nutrient", &cfg.model.noise_s}}) {
    auto s = section(name);
    s.num("a0", spec->a0);
    s.num("s_a", spec->s_a);
    s.num("m", spec->m);
    if (auto r = s.raw("K")) spec->truncation_K = detail::parse_uint(s.field("K"), *r);
    s.reject_unknown();
  }

  auto src = section("sources");
  src.num("w", cfg.w_value);
  src.num("z_amplitude", cfg.z_amplitude);
  if (auto r = src.raw("u")) cfg.u = detail::parse_dosage("sources.u", *r);
  src.reject_unknown();

  auto st = section("stepper");
  st.num("dt", cfg.stepper.dt);
  st.num("T", cfg.T);
  st.num("M", cfg.M);
  st.integer("snapshot_interval", cfg.snapshot_interval);
  if (auto r = st.raw("taming")) {
    const auto t = detail::trim(*r);
    if (t == "auto") cfg.stepper.taming.reset();
    else cfg.stepper.taming = detail::parse_bool("stepper.taming", t);
  }
  st.flag("convex_splitting", cfg.stepper.convex_splitting);
  if (auto r = st.raw("galerkin_n")) cfg.stepper.galerkin_n = detail::parse_uint("stepper.galerkin_n", *r);
  st.reject_unknown();
  if (!(cfg.stepper.dt > 0.0)) throw ConfigError("stepper.dt", "must be positive");
  if (!(cfg.T >= 0.0)) throw ConfigError("stepper.T", "must be nonnegative");
  if (!(cfg.M > 0.0)) throw ConfigError("stepper.M", "must be positive");
  try {
    step_count(cfg.T, cfg.stepper.dt);
  } catch (const UsageError&) {
    throw ConfigError("stepper.T", "must be a multiple of stepper.dt");
  }

  auto& ex = cfg.experiment;
  auto exs = section("experiment");
  exs.integer("seed", ex.seed);
  exs.integer("paths", ex.paths);
  exs.num("delta", ex.delta);
  exs.integer("operator_samples", ex.operator_samples);
  exs.text("out", ex.out);
  if (auto r = exs.raw("modes")) {
    ex.modes.clear();
    for (const auto& m : detail::split(*r, ',')) ex.modes.push_back(int(detail::parse_uint("experiment.modes", m)));
  }
  if (auto r = exs.raw("p")) {
    ex.p_list.clear();
    for (const auto& p : detail::split(*r, ',')) ex.p_list.push_back(detail::parse_double("experiment.p", p));
  }
  if (auto r = exs.raw("r")) {
    ex.r_list.clear();
    for (const auto& p : detail::split(*r, ',')) ex.r_list.push_back(detail::parse_double("experiment.r", p));
  }
  exs.text("initial", ex.initial.kind);
  exs.num("initial_amplitude", ex.initial.amplitude);
  exs.num("initial_decay", ex.initial.decay);
  exs.integer("initial_seed", ex.initial.seed);
  exs.text("initial_path", ex.initial.path);
  exs.reject_unknown();
  if (ex.initial.kind != "smooth" && ex.initial.kind != "random" && ex.initial.kind != "snapshot")
    throw ConfigError("experiment.initial", "expected smooth, random or snapshot");
  if (ex.initial.kind == "snapshot" && ex.initial.path.empty()) throw ConfigError("experiment.initial_path", "required for snapshot");
  if (ex.paths < 2) throw ConfigError("experiment.paths", "need at least 2 paths");
  for (double p : ex.p_list)
    if (p != 2.0 && p != 4.0) throw ConfigError("experiment.p", "p must be 2 or 4");
  for (double r : ex.r_list)
    if (!(r >= 1.0)) throw ConfigError("experiment.r", "r must be >= 1");
  for (std::size_t i = 1; i < ex.modes.size(); ++i)
    if (ex.modes[i] < ex.modes[i - 1]) throw ConfigError("experiment.modes", "must be ascending");

  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("", "cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

/// Noise validation for a basis, as a ConfigError.
inline void require_A2(const RunConfig& cfg, const Basis& basis) {
  for (const auto* spec : {&cfg.model.noise_v, &cfg.model.noise_s}) {
    const auto rep = validate_A2(basis, *spec, cfg.stepper.galerkin_n);
    if (!rep.passed) throw ConfigError(std::string("noise.") + channel_name(spec->channel), rep.summary());
  }
}

/// Model with the source fields materialized on `basis`.
inline Model model_on(const RunConfig& cfg, const BasisPtr& basis, std::optional<double> r = {}) {
  Model m = cfg.model;
  if (r) m.params.r = *r;
  m.sources = SourceFields::defaults(basis);
  m.sources.w = ScalarField::constant(basis, cfg.w_value);
  m.sources.u = cfg.u;
  if (cfg.z_amplitude != 0.0) {
    m.sources.z.c[1][basis->index_of({{1, 0, 0}})] = 0.5 * cfg.z_amplitude;
    m.sources.z.c[1][basis->index_of({{-1, 0, 0}})] = 0.5 * cfg.z_amplitude;
  }
  return m;
}

/// Low-mode preset: a few velocity modes, a perturbed tumour seed and a
/// nearly uniform nutrient.  Identical on every basis with N >= 8.
inline SystemState smooth_initial(const BasisPtr& basis, double amplitude = 1.0) {
  auto x = SystemState::zeros(basis);
  auto set = [&](std::vector<Complex>& c, WaveVector k, Complex z) {
    c[basis->index_of(k)] = amplitude * z;
    c[basis->index_of(-k)] = amplitude * std::conj(z);
  };
  set(x.v.c[0], {{0, 1, 0}}, 0.2);
  set(x.v.c[1], {{1, 0, 0}}, Complex(0.0, 0.15));
  set(x.v.c[0], {{1, 1, 0}}, 0.1);
  set(x.v.c[1], {{1, 1, 0}}, -0.1);
  if (basis->dim() == 3) set(x.v.c[2], {{1, 0, 1}}, 0.1);
  x.phi.c[0] = 0.1 * amplitude;
  set(x.phi.c, {{1, 0, 0}}, 0.3);
  set(x.phi.c, {{1, 1, 0}}, Complex(0.1, 0.1));
  set(x.phi.c, {{0, 2, 0}}, 0.15);
  x.sigma.c[0] = 1.0;
  set(x.sigma.c, {{0, 1, 0}}, 0.1);
  x.v = leray_project(x.v);
  return x;
}

/// Initial state on `basis`.  Random data is drawn on the largest basis
/// named by the experiment and restricted, so every resolution sees the
/// same field.
inline SystemState initial_state(const RunConfig& cfg, const BasisPtr& basis) {
  const auto& in = cfg.experiment.initial;
  if (in.kind == "snapshot") {
    auto x = read_snapshot(in.path);
    if (x.basis()->dim() != basis->dim() || x.basis()->side_length() != basis->side_length())
      throw ConfigError("experiment.initial_path", "snapshot domain does not match [domain]");
    x = embed(x, basis);
    x.time = 0.0;
    return x;
  }
  if (in.kind == "smooth") return smooth_initial(basis, in.amplitude);
  int modes = basis->modes();
  for (int m : cfg.experiment.modes) modes = std::max(modes, m);
  const auto big = Basis::make(DomainSpec{basis->dim(), basis->side_length(), modes});
  std::mt19937_64 rng(in.seed);
  const RandomFieldSpec rs{in.amplitude, in.decay, {}};
  SystemState x{random_divfree(big, rng, rs), random_scalar(big, rng, rs), random_scalar(big, rng, rs), 0.0};
  x.sigma.c[0] += 1.0;
  return embed(x, basis);
}

}  // namespace chcbf
