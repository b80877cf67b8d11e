#pragma once

// Experiment configuration, read from a YAML document.  Every map rejects
// keys it does not know; errors carry file:line:column.

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>

#include "bqc/io.hpp"
#include "bqc/pipeline.hpp"

namespace bqc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One basis mode amp * phi_k1(x1) * (cos | sin)(k2 x2); the x1 factor follows
// the field's parity, so `parity` is the x2 parity: even is cos, odd is sin.
struct ModeSpec {
  int k1 = 0, k2 = 0;
  double amp = 0.0;
  Parity x2_parity = Parity::even;
};

struct FieldSpec {
  enum class Kind { zero, modes, random };
  Kind kind = Kind::zero;
  std::vector<ModeSpec> modes;
  int l1 = 4, l2 = 4;  // random band
  double scale = 1.0;
  double decay = 2.0;
};

struct StateSpec {
  FieldSpec w, theta;
  double c = 0.0;
  std::optional<std::filesystem::path> snapshot;
};

struct ExperimentConfig {
  int nx1 = 32, nx2 = 32;
  double nu = 0.05, tau = 0.05;
  bool buoyancy = true;
  double dt = 1e-3, cfl = 0.0, t_end = 0.5;
  int output_every = 10;

  CutoffGeometry strip{0.0, 2 * pi, 0.0, 2 * pi, 8};
  bool align = true;  // raise H1 so each band translation is a whole number of grid shifts
  BumpKind bump = BumpKind::smooth;

  std::vector<double> deltas = {0.2, 0.1, 0.05, 0.025};
  double dsigma = 4e-5;
  double smoothing_eps = 0.05;
  int smoothing_m = 3;
  int steps_per_delta = 400;
  double xi_budget = 1e-3;

  int random_targets = 5;
  double transport_eps = 0.05;
  int transport_m = 3;
  int transport_band = 6;
  int export_samples = 0;

  std::vector<double> reference_steps = {1e-4, 5e-5};
  int reference_samples = 64;

  PipelineConfig pipeline;  // sim and strip are filled from the sections above

  StateSpec initial, target;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  std::filesystem::path source;  // config file, for relative snapshot paths

  SimConfig sim(const GridPtr& g) const {
    SimConfig c{g, nu, tau, {dt, cfl}};
    c.region_a = strip.a;
    c.region_b = strip.b;
    c.buoyancy = buoyancy;
    return c;
  }
};

namespace detail {

inline std::string where(const std::string& file, const YAML::Mark& m) {
  std::ostringstream o;
  o << file << ':' << (m.line + 1) << ':' << (m.column + 1) << ": ";
  return o.str();
}

// Typed access to one YAML map with unknown-key detection.
class Section {
 public:
  Section(const YAML::Node& node, std::string name, std::string file, std::set<std::string> keys)
      : node_(node), name_(std::move(name)), file_(std::move(file)) {
    if (!node_.IsMap()) fail(node_.Mark(), "section '" + name_ + "' must be a map");
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!keys.count(k)) {
        std::string known;
        for (const auto& s : keys) known += (known.empty() ? "" : ", ") + s;
        fail(kv.first.Mark(), "unknown key '" + k + "' in " + name_ + " (known: " + known + ")");
      }
    }
  }

  bool has(const std::string& k) const { return bool(node_[k]); }
  YAML::Node node(const std::string& k) const { return node_[k]; }
  YAML::Mark mark() const { return node_.Mark(); }
  const std::string& file() const { return file_; }

  template <class T>
  void get(const std::string& k, T& out) const {
    const YAML::Node n = node_[k];
    if (!n) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n.Mark(), name_ + "." + k + ": cannot read '" + (n.IsScalar() ? n.Scalar() : std::string("<node>")) +
                         "' as " + type_name<T>());
    }
  }

  [[noreturn]] void fail(const YAML::Mark& m, const std::string& msg) const {
    throw ConfigError(where(file_, m) + msg);
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "a list of numbers";
  }

  YAML::Node node_;
  std::string name_, file_;
};

inline FieldSpec parse_field(const YAML::Node& n, const std::string& name, const std::string& file) {
  FieldSpec f;
  if (n.IsScalar() && n.Scalar() == "zero") return f;
  Section s(n, name, file, {"modes", "random"});
  if (s.has("modes") && s.has("random")) s.fail(s.mark(), name + ": give either modes or random");
  if (s.has("modes")) {
    f.kind = FieldSpec::Kind::modes;
    const YAML::Node list = s.node("modes");
    if (!list.IsSequence()) s.fail(list.Mark(), name + ".modes must be a list of [k1, k2, amp, parity]");
    for (const auto& e : list) {
      if (!e.IsSequence() || e.size() != 4)
        s.fail(e.Mark(), name + ".modes: each entry is [k1, k2, amplitude, even|odd]");
      ModeSpec m;
      try {
        m.k1 = e[0].as<int>();
        m.k2 = e[1].as<int>();
        m.amp = e[2].as<double>();
      } catch (const YAML::Exception&) {
        s.fail(e.Mark(), name + ".modes: k1, k2 must be integers and the amplitude a number");
      }
      const std::string p = e[3].IsScalar() ? e[3].Scalar() : std::string();
      if (p == "even") m.x2_parity = Parity::even;
      else if (p == "odd") m.x2_parity = Parity::odd;
      else s.fail(e[3].Mark(), name + ".modes: parity must be even (cos x2) or odd (sin x2), got '" + p + "'");
      if (m.k1 < 0 || m.k2 < 0) s.fail(e.Mark(), name + ".modes: wavenumbers must be non-negative");
      if (m.k2 == 0 && m.x2_parity == Parity::odd) s.fail(e.Mark(), name + ".modes: sin(0 x2) is identically zero");
      f.modes.push_back(m);
    }
  }
  if (s.has("random")) {
    f.kind = FieldSpec::Kind::random;
    Section r(s.node("random"), name + ".random", file, {"k1", "k2", "scale", "decay"});
    r.get("k1", f.l1);
    r.get("k2", f.l2);
    r.get("scale", f.scale);
    r.get("decay", f.decay);
    if (f.l1 < 0 || f.l2 < 0) r.fail(r.mark(), name + ".random: band limits must be non-negative");
  }
  return f;
}

inline StateSpec parse_state(const YAML::Node& n, const std::string& name, const std::string& file) {
  StateSpec st;
  Section s(n, name, file, {"w", "theta", "c", "snapshot"});
  if (s.has("snapshot")) {
    if (s.has("w") || s.has("theta") || s.has("c"))
      s.fail(s.mark(), name + ": a snapshot excludes w, theta and c");
    std::string p;
    s.get("snapshot", p);
    st.snapshot = p;
    return st;
  }
  if (s.has("w")) st.w = parse_field(s.node("w"), name + ".w", file);
  if (s.has("theta")) st.theta = parse_field(s.node("theta"), name + ".theta", file);
  s.get("c", st.c);
  return st;
}

}  // namespace detail

// Validated configuration from YAML text; `file` is used in messages only.
inline ExperimentConfig parse_config(const std::string& text, const std::string& file = "<config>") {
  using detail::Section;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(detail::where(file, e.mark) + "parse error: " + e.msg);
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  Section top(root, "config", file,
              {"grid", "physics", "time", "control", "steering", "transport", "reference", "pipeline", "initial",
               "target", "output", "seed"});
  auto fail = [&](const YAML::Mark& m, const std::string& msg) { top.fail(m, msg); };

  YAML::Mark control_mark = root.Mark();
  if (top.has("grid")) {
    Section s(top.node("grid"), "grid", file, {"nx1", "nx2"});
    s.get("nx1", c.nx1);
    s.get("nx2", c.nx2);
    if (c.nx1 < 4 || c.nx2 < 4 || c.nx2 % 2) fail(s.mark(), "grid: need nx1 >= 4 and an even nx2 >= 4");
  }
  if (top.has("physics")) {
    Section s(top.node("physics"), "physics", file, {"nu", "tau", "buoyancy"});
    s.get("nu", c.nu);
    s.get("tau", c.tau);
    s.get("buoyancy", c.buoyancy);
    if (!(c.nu > 0 && c.tau > 0)) fail(s.mark(), "physics: nu and tau must be positive");
  }
  if (top.has("time")) {
    Section s(top.node("time"), "time", file, {"dt", "cfl", "t_end", "output_every"});
    s.get("dt", c.dt);
    s.get("cfl", c.cfl);
    s.get("t_end", c.t_end);
    s.get("output_every", c.output_every);
    if (!(c.dt > 0) || c.cfl < 0 || !(c.t_end >= 0) || c.output_every < 1)
      fail(s.mark(), "time: need dt > 0, cfl >= 0, t_end >= 0, output_every >= 1");
  }
  if (top.has("control")) {
    Section s(top.node("control"), "control", file, {"a", "b", "K", "H1", "H2", "align", "bump"});
    control_mark = s.mark();
    const bool has_h = s.has("H1") || s.has("H2");
    s.get("a", c.strip.a);
    s.get("b", c.strip.b);
    if (!has_h) {
      c.strip.H1 = c.strip.a;
      c.strip.H2 = c.strip.b;
    }
    s.get("K", c.strip.K);
    s.get("H1", c.strip.H1);
    s.get("H2", c.strip.H2);
    s.get("align", c.align);
    std::string bump = to_string(c.bump);
    s.get("bump", bump);
    try {
      c.bump = parse_bump_kind(bump);
    } catch (const std::invalid_argument& e) {
      fail(s.node("bump").Mark(), std::string("control.bump: ") + e.what());
    }
  }
  if (top.has("steering")) {
    Section s(top.node("steering"), "steering", file,
              {"deltas", "dsigma", "smoothing_eps", "m", "steps_per_delta", "xi_budget"});
    s.get("deltas", c.deltas);
    s.get("dsigma", c.dsigma);
    s.get("smoothing_eps", c.smoothing_eps);
    s.get("m", c.smoothing_m);
    s.get("steps_per_delta", c.steps_per_delta);
    s.get("xi_budget", c.xi_budget);
    if (c.deltas.empty()) fail(s.mark(), "steering.deltas must not be empty");
    for (double d : c.deltas)
      if (!(d > 0 && d < 1)) fail(s.node("deltas").Mark(), "steering.deltas: every delta must lie in (0, 1)");
    if (!(c.dsigma > 0 && c.dsigma < 1) || !(c.smoothing_eps > 0) || c.smoothing_m < 1 || c.steps_per_delta < 1 ||
        !(c.xi_budget > 0))
      fail(s.mark(), "steering: need 0 < dsigma < 1, smoothing_eps > 0, m >= 1, steps_per_delta >= 1, xi_budget > 0");
  }
  if (top.has("transport")) {
    Section s(top.node("transport"), "transport", file, {"random_targets", "eps", "m", "band", "export_samples"});
    s.get("random_targets", c.random_targets);
    s.get("eps", c.transport_eps);
    s.get("m", c.transport_m);
    s.get("band", c.transport_band);
    s.get("export_samples", c.export_samples);
    if (c.random_targets < 0 || !(c.transport_eps > 0) || c.transport_m < 1 || c.transport_band < 1 ||
        c.export_samples < 0)
      fail(s.mark(), "transport: need random_targets >= 0, eps > 0, m >= 1, band >= 1, export_samples >= 0");
  }
  if (top.has("reference")) {
    Section s(top.node("reference"), "reference", file, {"steps", "samples"});
    s.get("steps", c.reference_steps);
    s.get("samples", c.reference_samples);
    if (c.reference_steps.empty() || c.reference_samples < 1) fail(s.mark(), "reference: need steps and samples >= 1");
    for (double h : c.reference_steps)
      if (!(h > 0 && h < 0.01)) fail(s.node("steps").Mark(), "reference.steps must lie in (0, 0.01)");
  }
  bool gammas_given = false;
  if (top.has("pipeline")) {
    Section s(top.node("pipeline"), "pipeline", file,
              {"eps", "T", "t1_fraction", "trailing", "gammas", "beta", "kappa", "delta_special", "delta_final",
               "smoothing_share", "dsigma"});
    PipelineConfig& p = c.pipeline;
    s.get("eps", p.eps);
    s.get("T", p.T);
    s.get("t1_fraction", p.t1_fraction);
    s.get("trailing", p.trailing);
    gammas_given = s.has("gammas");
    s.get("gammas", p.gamma_schedule);
    s.get("beta", p.beta);
    s.get("kappa", p.kappa);
    s.get("delta_special", p.delta_special);
    s.get("delta_final", p.delta_final);
    s.get("smoothing_share", p.smoothing_share);
    s.get("dsigma", p.steer.dsigma);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      fail(s.mark(), e.what());
    }
  }
  if (!gammas_given) c.pipeline.gamma_schedule = c.deltas;
  if (top.has("initial")) c.initial = detail::parse_state(top.node("initial"), "initial", file);
  if (top.has("target")) c.target = detail::parse_state(top.node("target"), "target", file);
  if (top.has("output")) {
    std::string o;
    top.get("output", o);
    c.output = o;
  }
  if (top.has("seed")) top.get("seed", c.seed);

  // geometry rules of the control strip
  if (c.align) {
    if (c.nx2 % (2 * c.strip.K) != 0)
      fail(control_mark, "control.align: nx2 = " + std::to_string(c.nx2) + " is not a multiple of 2K = " +
                             std::to_string(2 * c.strip.K) + "; set align: false or change K");
    c.strip.H1 = grid_aligned_H1(c.strip.H1, c.strip.K, c.nx2);
  }
  try {
    Cutoff chi(c.strip);
    (void)chi;
  } catch (const std::invalid_argument& e) {
    fail(control_mark, std::string(e.what()) + (c.align ? " (after aligning H1 to the grid)" : ""));
  }
  c.pipeline.strip = c.strip;
  c.pipeline.bump = c.bump;
  c.pipeline.vorticity_steps_per_delta = c.steps_per_delta;
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  ExperimentConfig c = parse_config(ss.str(), path.string());
  c.source = path;
  return c;
}

inline ScalarField build_field(const FieldSpec& f, const GridPtr& g, Parity p, std::mt19937_64& rng) {
  ScalarField out(g, p);
  switch (f.kind) {
    case FieldSpec::Kind::zero: break;
    case FieldSpec::Kind::modes:
      for (const auto& m : f.modes) {
        if (p == Parity::odd && m.k1 == 0) throw ConfigError("mode k1 = 0 does not exist for the odd (sine) basis");
        if (m.k1 >= g->nx1() || 2 * m.k2 >= g->nx2())
          throw ConfigError("mode (" + std::to_string(m.k1) + ", " + std::to_string(m.k2) + ") is not on the grid");
        out += mode_field(g, p, m.k1, m.k2, m.amp, m.x2_parity == Parity::odd);
      }
      break;
    case FieldSpec::Kind::random: out = f.scale * random_field(g, p, f.l1, f.l2, rng, f.decay); break;
  }
  return out;
}

// Initial or target state; random fields draw from `rng` in the order w, theta.
inline State build_state(const StateSpec& s, const ExperimentConfig& c, const GridPtr& g, std::mt19937_64& rng) {
  if (s.snapshot) {
    std::filesystem::path p = *s.snapshot;
    if (p.is_relative() && !c.source.empty()) p = c.source.parent_path() / p;
    State st = read_snapshot(p, g);
    if (st.w.grid() != g)
      throw ConfigError(p.string() + ": snapshot grid " + std::to_string(st.w.grid()->nx1()) + "x" +
                        std::to_string(st.w.grid()->nx2()) + " differs from the configured grid");
    return st;
  }
  State st = State::zero(g);
  st.w = build_field(s.w, g, Parity::odd, rng);
  st.theta = build_field(s.theta, g, Parity::even, rng);
  st.mean_coeff = s.c;
  return st;
}

}  // namespace bqc
