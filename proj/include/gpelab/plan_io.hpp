#pragma once

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gpelab/error.hpp"
#include "gpelab/pipeline.hpp"

// Plan file schema v1 (YAML). Variants are single-key maps naming the
// variant, e.g. `potential: {sinusoidal: {amplitude: 1, wavenumber: 2}}`;
// `zero` may be written as a bare scalar. Any real value accepts a trailing
// "pi" ("0.3pi", "pi").

namespace gpelab {

inline constexpr int kPlanSchemaVersion = 1;

namespace plan_io_detail {

class Parser {
 public:
  [[noreturn]] static void error(const YAML::Node& node, const std::string& path,
                                 const std::string& msg) {
    std::ostringstream os;
    os << path << ": " << msg;
    if (node.IsDefined() && node.Mark().line >= 0) os << " (line " << node.Mark().line + 1 << ")";
    throw Error(ErrorCategory::parse, os.str());
  }

  static void expect_keys(const YAML::Node& node, const std::string& path,
                          std::initializer_list<std::string_view> allowed) {
    if (!node.IsMap()) error(node, path, "expected a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || key == a;
      if (!ok) error(kv.first, path, "unknown key '" + key + "'");
    }
  }

  static YAML::Node child(const YAML::Node& node, const std::string& path, const std::string& key) {
    YAML::Node c = node[key];
    if (!c.IsDefined()) error(node, path, "missing required field '" + key + "'");
    return c;
  }

  static double real(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) error(node, path, "expected a number");
    std::string s = node.Scalar();
    double scale = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
      scale = std::numbers::pi;
      s.resize(s.size() - 2);
      if (s.empty() || s == "+") s = "1";
      if (s == "-") s = "-1";
    }
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v))
      error(node, path, "invalid number '" + node.Scalar() + "'");
    return v * scale;
  }

  static double real(const YAML::Node& map, const std::string& path, const std::string& key) {
    return real(child(map, path, key), path + "." + key);
  }

  static double real_or(const YAML::Node& map, const std::string& path, const std::string& key,
                        double fallback) {
    return map[key].IsDefined() ? real(map[key], path + "." + key) : fallback;
  }

  static std::uint64_t count(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) error(node, path, "expected a non-negative integer");
    const std::string& s = node.Scalar();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      error(node, path, "invalid non-negative integer '" + s + "'");
    return v;
  }

  static std::string text(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) error(node, path, "expected a string");
    return node.Scalar();
  }

  // Returns {tag, body} for a single-key variant map (or bare scalar tag).
  static std::pair<std::string, YAML::Node> variant(const YAML::Node& node, const std::string& path) {
    if (node.IsScalar()) return {node.Scalar(), YAML::Node(YAML::NodeType::Map)};
    if (!node.IsMap() || node.size() != 1)
      error(node, path, "expected a single-key variant mapping");
    auto it = node.begin();
    YAML::Node body = it->second;
    if (body.IsNull()) body = YAML::Node(YAML::NodeType::Map);
    return {it->first.as<std::string>(), body};
  }

  static PotentialSpec potential(const YAML::Node& node, const std::string& path) {
    auto [tag, body] = variant(node, path);
    const std::string p = path + "." + tag;
    if (tag == "zero") {
      expect_keys(body, p, {});
      return ZeroPotential{};
    }
    if (tag == "harmonic") {
      expect_keys(body, p, {"half_strength"});
      HarmonicPotential h{real(body, p, "half_strength")};
      if (h.half_strength < 0.0) error(body, p + ".half_strength", "must be >= 0");
      return h;
    }
    if (tag == "sinusoidal") {
      expect_keys(body, p, {"amplitude", "wavenumber"});
      SinusoidalPotential s{real(body, p, "amplitude"), real(body, p, "wavenumber")};
      if (s.wavenumber <= 0.0) error(body, p + ".wavenumber", "must be > 0");
      return s;
    }
    if (tag == "sum") {
      if (!body.IsSequence() || body.size() == 0) error(body, p, "expected a non-empty list");
      SumPotential sum;
      for (std::size_t i = 0; i < body.size(); ++i)
        sum.terms.push_back(potential(body[i], p + "[" + std::to_string(i) + "]"));
      return sum;
    }
    error(node, path, "unknown potential variant '" + tag + "'");
  }

  static NonlinearitySpec nonlinearity(const YAML::Node& node, const std::string& path) {
    auto [tag, body] = variant(node, path);
    const std::string p = path + "." + tag;
    if (tag == "constant") {
      expect_keys(body, p, {"cn"});
      return ConstantNonlinearity{real(body, p, "cn")};
    }
    if (tag == "sinusoidal") {
      expect_keys(body, p, {"amplitude", "wavenumber", "offset"});
      SinusoidalNonlinearity s{real(body, p, "amplitude"), real(body, p, "wavenumber"),
                               real_or(body, p, "offset", 0.0)};
      if (s.wavenumber <= 0.0) error(body, p + ".wavenumber", "must be > 0");
      return s;
    }
    if (tag == "parabolic") {
      expect_keys(body, p, {"cn", "x_scale"});
      ParabolicNonlinearity q{real(body, p, "cn"), real(body, p, "x_scale")};
      if (q.x_scale <= 0.0) error(body, p + ".x_scale", "must be > 0");
      return q;
    }
    error(node, path, "unknown nonlinearity variant '" + tag + "'");
  }

  static ExperimentPlan plan(const YAML::Node& root) {
    const std::string r = "plan";
    expect_keys(root, r, {"schema_version", "label", "kinetic_coeff", "grid", "stepper", "init", "stages"});
    const auto version = count(child(root, r, "schema_version"), "schema_version");
    if (version != kPlanSchemaVersion)
      error(root["schema_version"], "schema_version",
            "unsupported schema version " + std::to_string(version));

    ExperimentPlan plan;
    plan.label = root["label"].IsDefined() ? text(root["label"], "label") : "";
    plan.kinetic_coeff = real_or(root, r, "kinetic_coeff", kStandardKinetic);
    if (plan.kinetic_coeff <= 0.0) error(root["kinetic_coeff"], "kinetic_coeff", "must be > 0");

    if (root["grid"].IsDefined()) {
      const auto g = root["grid"];
      expect_keys(g, "grid", {"x_min", "x_max", "n_points"});
      const double lo = real(g, "grid", "x_min");
      const double hi = real(g, "grid", "x_max");
      const auto n = count(child(g, "grid", "n_points"), "grid.n_points");
      try {
        plan.grid = Grid1D(lo, hi, static_cast<std::size_t>(n));
      } catch (const Error& e) {
        error(g, "grid", e.what());
      }
    }

    if (root["stepper"].IsDefined()) {
      const auto s = root["stepper"];
      expect_keys(s, "stepper", {"dt", "method", "norm_drift_tol", "boundary_density_tol"});
      StepperConfig& c = plan.stepper;
      c.dt = real_or(s, "stepper", "dt", c.dt);
      c.norm_drift_tol = real_or(s, "stepper", "norm_drift_tol", c.norm_drift_tol);
      c.boundary_density_tol = real_or(s, "stepper", "boundary_density_tol", c.boundary_density_tol);
      if (s["method"].IsDefined()) c.method = method(s["method"], "stepper.method");
      if (c.dt <= 0.0) error(s["dt"], "stepper.dt", "must be > 0");
      if (c.norm_drift_tol <= 0.0) error(s, "stepper.norm_drift_tol", "must be > 0");
      if (c.boundary_density_tol <= 0.0) error(s, "stepper.boundary_density_tol", "must be > 0");
    }

    plan.init = init(child(root, r, "init"), "init");

    const auto stages = child(root, r, "stages");
    if (!stages.IsSequence() || stages.size() == 0) error(stages, "stages", "expected a non-empty list");
    for (std::size_t i = 0; i < stages.size(); ++i)
      plan.stages.push_back(stage(stages[i], "stages[" + std::to_string(i) + "]"));

    try {
      validate(plan);
    } catch (const Error& e) {
      error(root, "plan", e.what());
    }
    return plan;
  }

  static Method method(const YAML::Node& node, const std::string& path) {
    const auto m = text(node, path);
    if (m == "rk4") return Method::rk4_spectral;
    if (m == "splitstep") return Method::split_step;
    error(node, path, "unknown method '" + m + "' (expected rk4 or splitstep)");
  }

  static InitSpec init(const YAML::Node& node, const std::string& path) {
    auto [tag, body] = variant(node, path);
    const std::string p = path + "." + tag;
    if (tag == "ground_state") {
      expect_keys(body, p, {"potential", "nonlinearity", "tol"});
      GroundStateInit g{potential(child(body, p, "potential"), p + ".potential"),
                        nonlinearity(child(body, p, "nonlinearity"), p + ".nonlinearity"),
                        real_or(body, p, "tol", 1e-10)};
      if (harmonic_strength(g.potential) <= 0.0)
        error(body, p + ".potential", "ground-state init needs a confining harmonic term");
      if (g.tol <= 0.0) error(body, p + ".tol", "must be > 0");
      return g;
    }
    if (tag == "gaussian") {
      expect_keys(body, p, {"center", "width", "momentum"});
      GaussianInit g{real_or(body, p, "center", 0.0), real(body, p, "width"),
                     real_or(body, p, "momentum", 0.0)};
      if (g.width <= 0.0) error(body, p + ".width", "must be > 0");
      return g;
    }
    error(node, path, "unknown init variant '" + tag + "'");
  }

  static Stage stage(const YAML::Node& node, const std::string& path) {
    expect_keys(node, path, {"name", "duration", "snapshot_every", "potential", "nonlinearity"});
    Stage s;
    s.name = node["name"].IsDefined() ? text(node["name"], path + ".name") : "";
    s.duration = real(node, path, "duration");
    if (s.duration < 0.0) error(node["duration"], path + ".duration", "must be >= 0");
    if (node["snapshot_every"].IsDefined())
      s.snapshot_every = count(node["snapshot_every"], path + ".snapshot_every");
    s.potential = node["potential"].IsDefined() ? potential(node["potential"], path + ".potential")
                                                : PotentialSpec{};
    s.nonlinearity = nonlinearity(child(node, path, "nonlinearity"), path + ".nonlinearity");
    return s;
  }
};

inline std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// "<r>pi" when that spelling reads back bit-identically.
inline std::string real_text(double v, bool prefer_pi) {
  if (prefer_pi && v != 0.0) {
    const std::string r = shortest(v / std::numbers::pi);
    double back = 0.0;
    std::from_chars(r.data(), r.data() + r.size(), back);
    if (back * std::numbers::pi == v) return r + "pi";
  }
  return shortest(v);
}

inline void emit_potential(YAML::Emitter& out, const PotentialSpec& spec) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ZeroPotential>) {
          out << "zero";
        } else if constexpr (std::is_same_v<T, HarmonicPotential>) {
          out << YAML::Flow << YAML::BeginMap << YAML::Key << "harmonic" << YAML::Value
              << YAML::BeginMap << YAML::Key << "half_strength" << YAML::Value
              << shortest(p.half_strength) << YAML::EndMap << YAML::EndMap;
        } else if constexpr (std::is_same_v<T, SinusoidalPotential>) {
          out << YAML::Flow << YAML::BeginMap << YAML::Key << "sinusoidal" << YAML::Value
              << YAML::BeginMap << YAML::Key << "amplitude" << YAML::Value << shortest(p.amplitude)
              << YAML::Key << "wavenumber" << YAML::Value << shortest(p.wavenumber) << YAML::EndMap
              << YAML::EndMap;
        } else {
          out << YAML::BeginMap << YAML::Key << "sum" << YAML::Value << YAML::BeginSeq;
          for (const auto& t : p.terms) emit_potential(out, t);
          out << YAML::EndSeq << YAML::EndMap;
        }
      },
      spec.value);
}

inline void emit_nonlinearity(YAML::Emitter& out, const NonlinearitySpec& spec) {
  out << YAML::Flow << YAML::BeginMap;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ConstantNonlinearity>) {
          out << YAML::Key << "constant" << YAML::Value << YAML::BeginMap << YAML::Key << "cn"
              << YAML::Value << shortest(c.cn) << YAML::EndMap;
        } else if constexpr (std::is_same_v<T, SinusoidalNonlinearity>) {
          out << YAML::Key << "sinusoidal" << YAML::Value << YAML::BeginMap << YAML::Key
              << "amplitude" << YAML::Value << shortest(c.amplitude) << YAML::Key << "wavenumber"
              << YAML::Value << shortest(c.wavenumber) << YAML::Key << "offset" << YAML::Value
              << shortest(c.offset) << YAML::EndMap;
        } else {
          out << YAML::Key << "parabolic" << YAML::Value << YAML::BeginMap << YAML::Key << "cn"
              << YAML::Value << shortest(c.cn) << YAML::Key << "x_scale" << YAML::Value
              << shortest(c.x_scale) << YAML::EndMap;
        }
      },
      spec.value);
  out << YAML::EndMap;
}

}  // namespace plan_io_detail

/// Parses plan text; throws Error(parse) naming the field path (and line).
inline ExperimentPlan parse_plan(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCategory::parse, "syntax error at line " + std::to_string(e.mark.line + 1) +
                                          ": " + e.msg);
  }
  try {
    return plan_io_detail::Parser::plan(root);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCategory::parse, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

inline ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open plan file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

/// Canonical text form; parse_plan(emit_plan(p)) == p.
inline std::string emit_plan(const ExperimentPlan& plan) {
  using namespace plan_io_detail;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "schema_version" << YAML::Value << kPlanSchemaVersion;
  out << YAML::Key << "label" << YAML::Value << plan.label;
  out << YAML::Key << "kinetic_coeff" << YAML::Value << shortest(plan.kinetic_coeff);
  out << YAML::Key << "grid" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "x_min"
      << YAML::Value << shortest(plan.grid.x_min()) << YAML::Key << "x_max" << YAML::Value
      << shortest(plan.grid.x_max()) << YAML::Key << "n_points" << YAML::Value << plan.grid.size()
      << YAML::EndMap;
  const auto& c = plan.stepper;
  out << YAML::Key << "stepper" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "dt"
      << YAML::Value << shortest(c.dt) << YAML::Key << "method" << YAML::Value
      << std::string(to_string(c.method)) << YAML::Key << "norm_drift_tol" << YAML::Value
      << shortest(c.norm_drift_tol) << YAML::Key << "boundary_density_tol" << YAML::Value
      << shortest(c.boundary_density_tol) << YAML::EndMap;

  out << YAML::Key << "init" << YAML::Value << YAML::BeginMap;
  if (const auto* g = std::get_if<GroundStateInit>(&plan.init)) {
    out << YAML::Key << "ground_state" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "potential" << YAML::Value;
    emit_potential(out, g->potential);
    out << YAML::Key << "nonlinearity" << YAML::Value;
    emit_nonlinearity(out, g->nonlinearity);
    out << YAML::Key << "tol" << YAML::Value << shortest(g->tol);
    out << YAML::EndMap;
  } else {
    const auto& gi = std::get<GaussianInit>(plan.init);
    out << YAML::Key << "gaussian" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
        << "center" << YAML::Value << shortest(gi.center) << YAML::Key << "width" << YAML::Value
        << shortest(gi.width) << YAML::Key << "momentum" << YAML::Value << shortest(gi.momentum)
        << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "stages" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : plan.stages) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "duration" << YAML::Value << real_text(s.duration, true);
    out << YAML::Key << "snapshot_every" << YAML::Value << s.snapshot_every;
    out << YAML::Key << "potential" << YAML::Value;
    emit_potential(out, s.potential);
    out << YAML::Key << "nonlinearity" << YAML::Value;
    emit_nonlinearity(out, s.nonlinearity);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// Replaces the scalar at a dotted path ("stages.1.duration") in plan text and
/// re-parses. Sequence elements are addressed by index.
inline ExperimentPlan override_plan_field(const std::string& text, const std::string& path,
                                          const std::string& value) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCategory::parse, "syntax error at line " + std::to_string(e.mark.line + 1) +
                                          ": " + e.msg);
  }
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  require(!parts.empty(), "override: empty parameter path");

  auto child_of = [&](const YAML::Node& node, const std::string& key) -> YAML::Node {
    if (node.IsSequence()) {
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || p != key.data() + key.size() || idx >= node.size())
        fail(ErrorCategory::invalid_argument, "override: bad index '" + key + "' in " + path);
      return node[idx];
    }
    if (node.IsMap() && node[key].IsDefined()) return node[key];
    fail(ErrorCategory::invalid_argument, "override: no field '" + key + "' in " + path);
  };

  YAML::Node node = root;
  for (const auto& key : parts) {
    YAML::Node next = child_of(node, key);
    node.reset(next);
  }
  if (!node.IsScalar())
    fail(ErrorCategory::invalid_argument, "override: " + path + " is not a scalar field");
  node = value;
  return plan_io_detail::Parser::plan(root);
}

}  // namespace gpelab
