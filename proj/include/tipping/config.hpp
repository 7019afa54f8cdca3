#ifndef TIPPING_CONFIG_HPP
#define TIPPING_CONFIG_HPP

// JSON run configuration: model, mechanism, numerics, experiment and output
// blocks. `resolve` fills every default and expands presets so that the
// resolved document alone reproduces a run.

#include <json.hpp>

#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tipping/classify.hpp"
#include "tipping/error.hpp"
#include "tipping/models.hpp"
#include "tipping/presets.hpp"
#include "tipping/transitions.hpp"

namespace tipping::config {

using json = nlohmann::ordered_json;

namespace detail {

inline void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw config_error(std::string(where) + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw config_error("unknown key '" + k + "' in " + std::string(where));
  }
}

inline const json& need(const json& obj, std::string_view key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw config_error("missing key '" + std::string(key) + "' in " + std::string(where));
  }
  return *it;
}

inline double num(const json& obj, std::string_view key, std::string_view where) {
  const json& v = need(obj, key, where);
  if (!v.is_number()) throw config_error(std::string(where) + "." + std::string(key) + " must be a number");
  return v.get<double>();
}

inline std::string str(const json& obj, std::string_view key, std::string_view where) {
  const json& v = need(obj, key, where);
  if (!v.is_string()) throw config_error(std::string(where) + "." + std::string(key) + " must be a string");
  return v.get<std::string>();
}

// Recursively overlays `over` on `base`; objects merge, everything else
// replaces.
inline void merge(json& base, const json& over) {
  if (!base.is_object() || !over.is_object()) {
    base = over;
    return;
  }
  for (const auto& [k, v] : over.items()) {
    if (base.contains(k) && base[k].is_object() && v.is_object()) merge(base[k], v);
    else base[k] = v;
  }
}

// Every key of `doc` must exist in `schema`, recursively through objects.
inline void check_against(const json& doc, const json& schema, const std::string& where) {
  if (!doc.is_object()) throw config_error(where + " must be an object");
  for (const auto& [k, v] : doc.items()) {
    if (!schema.contains(k)) throw config_error("unknown key '" + k + "' in " + where);
    if (schema[k].is_object()) check_against(v, schema[k], where + "." + k);
  }
}

}  // namespace detail

inline json coefficient_to_json(const CoefficientFunction& f) {
  json terms = json::array();
  for (const auto& t : f.terms()) {
    terms.push_back({{"shape", std::string(to_string(t.shape))},
                     {"amplitude", t.amplitude},
                     {"frequency", t.frequency},
                     {"phase", t.phase}});
  }
  return {{"base", f.base()}, {"terms", terms}};
}

inline CoefficientFunction coefficient_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return CoefficientFunction::constant(j.get<double>());
  detail::check_keys(j, {"base", "terms"}, where);
  std::vector<Term> terms;
  if (j.contains("terms")) {
    if (!j["terms"].is_array()) throw config_error(where + ".terms must be an array");
    for (const auto& t : j["terms"]) {
      const std::string tw = where + ".terms[]";
      detail::check_keys(t, {"shape", "amplitude", "frequency", "phase"}, tw);
      terms.push_back({term_shape_from_string(detail::str(t, "shape", tw)), detail::num(t, "amplitude", tw),
                       t.contains("frequency") ? detail::num(t, "frequency", tw) : 1.0,
                       t.contains("phase") ? detail::num(t, "phase", tw) : 0.0});
    }
  }
  return CoefficientFunction(detail::num(j, "base", where), std::move(terms));
}

inline json model_to_json(const VectorFieldModel& m) {
  json coeffs = json::object();
  for (const auto& [name, f] : m.coefficients()) coeffs[name] = coefficient_to_json(f);
  return {{"family", std::string(to_string(m.family()))},
          {"coefficients", coeffs},
          {"state_box", {m.state_box().lo, m.state_box().hi}},
          {"shift", m.additive_shift()}};
}

inline json profile_to_json(const Profile& p) {
  const auto& q = p.params();
  switch (p.kind()) {
    case ProfileKind::constant: return {{"kind", "constant"}, {"value", q[0]}};
    case ProfileKind::cauchy_pulse:
      return {{"kind", "cauchy-pulse"}, {"gamma_plus", q[0]}, {"gamma_star", q[1]}, {"b", q[2]}};
    case ProfileKind::arctan_ramp: return {{"kind", "arctan-ramp"}, {"scale", q[0]}, {"offset", q[1]}};
    case ProfileKind::sigmoid_blend: return {{"kind", "sigmoid-blend"}, {"v_minus", q[0]}, {"v_plus", q[1]}};
    case ProfileKind::rational_dip:
      return {{"kind", "rational-dip"}, {"base", q[0]}, {"amplitude", q[1]}, {"offset", q[2]}, {"scale", q[3]}};
    case ProfileKind::arctan_step:
      return {{"kind", "arctan-step"}, {"base", q[0]}, {"amplitude", q[1]}, {"width", q[2]}};
  }
  throw config_error("unknown profile kind");
}

inline VectorFieldModel model_preset(std::string_view name) {
  if (name == "allee-rational") return presets::allee_rational();
  if (name == "logistic-migration") return presets::logistic_migration();
  if (name == "holling-predation") return presets::holling_predation();
  throw config_error("unknown model preset '" + std::string(name) + "'");
}

inline Profile profile_preset(std::string_view name) {
  if (name == "allee-pulse") return presets::allee_pulse();
  if (name == "logistic-ramp") return presets::logistic_ramp();
  if (name == "holling-dip") return presets::holling_dip();
  throw config_error("unknown profile preset '" + std::string(name) + "'");
}

inline Profile profile_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  if (j.contains("preset")) {
    detail::check_keys(j, {"preset"}, where);
    return profile_preset(detail::str(j, "preset", where));
  }
  const std::string kind = detail::str(j, "kind", where);
  ProfileParams p;
  for (const auto& [k, v] : j.items()) {
    if (k == "kind") continue;
    if (!v.is_number()) throw config_error(where + "." + k + " must be a number");
    p[k] = v.get<double>();
  }
  Profile prof = make_profile(kind, p);
  // Reject stray keys by round-tripping through the canonical form.
  const json canon = profile_to_json(prof);
  for (const auto& [k, v] : j.items()) {
    if (!canon.contains(k)) throw config_error("unknown key '" + k + "' in " + where);
  }
  return prof;
}

inline VectorFieldModel model_from_json(const json& j) {
  const std::string where = "model";
  if (!j.is_object()) throw config_error("model block must be an object");
  if (j.contains("preset")) {
    detail::check_keys(j, {"preset", "state_box", "shift"}, where);
    VectorFieldModel m = model_preset(detail::str(j, "preset", where));
    if (j.contains("state_box")) {
      const auto& b = j["state_box"];
      if (!b.is_array() || b.size() != 2) throw config_error("model.state_box must be [lo, hi]");
      m = m.with_state_box({b[0].get<double>(), b[1].get<double>()});
    }
    if (j.contains("shift")) m = m.with_additive_shift(detail::num(j, "shift", where));
    return m;
  }
  detail::check_keys(j, {"family", "coefficients", "state_box", "shift"}, where);
  CoefficientSpec spec;
  const auto& coeffs = detail::need(j, "coefficients", where);
  if (!coeffs.is_object()) throw config_error("model.coefficients must be an object");
  for (const auto& [name, v] : coeffs.items()) spec.emplace(name, coefficient_from_json(v, "model.coefficients." + name));
  VectorFieldModel m = make_model(detail::str(j, "family", where), spec);
  if (j.contains("state_box")) {
    const auto& b = j["state_box"];
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      throw config_error("model.state_box must be [lo, hi]");
    }
    m = m.with_state_box({b[0].get<double>(), b[1].get<double>()});
  }
  if (j.contains("shift")) m = m.with_additive_shift(detail::num(j, "shift", where));
  return m;
}

inline TransitionMechanism mechanism_from_json(const json& j) {
  const std::string where = "mechanism";
  if (!j.is_object()) throw config_error("mechanism block must be an object");
  const Profile profile = profile_from_json(detail::need(j, "profile", where), where + ".profile");
  const std::string kind = detail::str(j, "kind", where);
  auto num = [&](std::string_view k) { return detail::num(j, k, where); };
  auto num_or = [&](std::string_view k, double v) { return j.contains(k) ? detail::num(j, k, where) : v; };
  auto delta = [&] { return profile_from_json(detail::need(j, "delta", where), where + ".delta"); };
  if (kind == "constant-rate") {
    detail::check_keys(j, {"profile", "kind", "c"}, where);
    return {profile, ConstantRate{num("c")}};
  }
  if (kind == "phase") {
    detail::check_keys(j, {"profile", "kind", "c", "s", "sign"}, where);
    return phase_problem(profile, num("c"), num("s"), num_or("sign", -1.0));
  }
  if (kind == "size") {
    detail::check_keys(j, {"profile", "kind", "c"}, where);
    return {profile, SizeScale{num("c")}};
  }
  if (kind == "time-dependent-rate") {
    detail::check_keys(j, {"profile", "kind", "delta", "d"}, where);
    return {profile, TimeDependentRate{delta(), num_or("d", 1.0)}};
  }
  if (kind == "time-dependent-phase") {
    detail::check_keys(j, {"profile", "kind", "c", "delta", "d", "sign"}, where);
    return {profile, TimeDependentPhase{num_or("c", 1.0), delta(), num_or("d", 1.0), num_or("sign", -1.0)}};
  }
  if (kind == "switching") {
    detail::check_keys(j, {"profile", "kind", "variable", "left", "right", "t0", "c", "sign"}, where);
    const std::string var = j.contains("variable") ? detail::str(j, "variable", where) : "rate";
    if (var != "rate" && var != "phase") throw config_error("mechanism.variable must be 'rate' or 'phase'");
    return {profile, Switching{var == "rate" ? SwitchVariable::rate : SwitchVariable::phase, num("left"),
                               num("right"), num_or("t0", 0.0), num_or("c", 1.0), num_or("sign", -1.0)}};
  }
  if (kind == "reaction") {
    detail::check_keys(j, {"profile", "kind", "delta", "strength", "sharpness", "t1"}, where);
    return {profile, Reaction{delta(), num("strength"), num_or("sharpness", 1.0), num("t1")}};
  }
  throw config_error("unknown mechanism kind '" + kind + "'");
}

inline json default_numerics() {
  const IntegratorConfig ic{};
  const AttractorConfig ac{};
  const ClassifyConfig cc{};
  return {{"integrator",
           {{"method", "dopri54"},
            {"rel_tol", ic.rel_tol},
            {"abs_tol", ic.abs_tol},
            {"max_step", ic.max_step},
            {"fixed_step", ic.fixed_step},
            {"lower_bound", ic.lower_bound},
            {"upper_bound", ic.upper_bound},
            {"max_steps", ic.max_steps}}},
          {"attractors",
           {{"burn_in", ac.burn_in},
            {"max_doublings", ac.max_doublings},
            {"conv_tol", ac.conv_tol},
            {"sep_tol", ac.sep_tol},
            {"seed_margin", ac.seed_margin},
            {"horizon", ac.horizon},
            {"max_horizon", ac.max_horizon},
            {"limit_tol", ac.limit_tol},
            {"anchor_delta", ac.anchor_delta},
            {"anchor_tol", ac.anchor_tol},
            {"anchor_check", ac.anchor_check},
            {"band_margin", ac.band_margin},
            {"grid_step", ac.grid_step}}},
          {"classify", {{"track_fraction", cc.track_fraction}, {"double_horizon_once", cc.double_horizon_once}}},
          {"threads", 1},
          {"m_cache", true}};
}

inline ClassifyConfig numerics_from_json(const json& j) {
  detail::check_against(j, default_numerics(), "numerics");
  json n = default_numerics();
  detail::merge(n, j);
  ClassifyConfig cc;
  try {
    const auto& i = n["integrator"];
    const std::string method = i["method"].get<std::string>();
    if (method == "dopri54") cc.attractors.integrator.method = Method::dopri54;
    else if (method == "rk4") cc.attractors.integrator.method = Method::rk4;
    else throw config_error("numerics.integrator.method must be 'dopri54' or 'rk4'");
    auto& ic = cc.attractors.integrator;
    ic.rel_tol = i["rel_tol"].get<double>();
    ic.abs_tol = i["abs_tol"].get<double>();
    ic.max_step = i["max_step"].get<double>();
    ic.fixed_step = i["fixed_step"].get<double>();
    ic.lower_bound = i["lower_bound"].get<double>();
    ic.upper_bound = i["upper_bound"].get<double>();
    ic.max_steps = i["max_steps"].get<std::size_t>();
    const auto& a = n["attractors"];
    auto& ac = cc.attractors;
    ac.burn_in = a["burn_in"].get<double>();
    ac.max_doublings = a["max_doublings"].get<int>();
    ac.conv_tol = a["conv_tol"].get<double>();
    ac.sep_tol = a["sep_tol"].get<double>();
    ac.seed_margin = a["seed_margin"].get<double>();
    ac.horizon = a["horizon"].get<double>();
    ac.max_horizon = a["max_horizon"].get<double>();
    ac.limit_tol = a["limit_tol"].get<double>();
    ac.anchor_delta = a["anchor_delta"].get<double>();
    ac.anchor_tol = a["anchor_tol"].get<double>();
    ac.anchor_check = a["anchor_check"].get<bool>();
    ac.band_margin = a["band_margin"].get<double>();
    ac.grid_step = a["grid_step"].get<double>();
    cc.track_fraction = n["classify"]["track_fraction"].get<double>();
    cc.double_horizon_once = n["classify"]["double_horizon_once"].get<bool>();
  } catch (const json::exception& e) {
    throw config_error(std::string("numerics: ") + e.what());
  }
  cc.attractors.validate();
  if (!(cc.track_fraction > 0.0)) throw config_error("numerics.classify.track_fraction must be positive");
  return cc;
}

inline unsigned threads_from_json(const json& numerics) {
  if (!numerics.contains("threads")) return 1;
  const auto& t = numerics["threads"];
  if (!t.is_number_integer() || t.get<long long>() < 1) throw config_error("numerics.threads must be a positive integer");
  return static_cast<unsigned>(t.get<long long>());
}

/// Values of a grid axis: an explicit array, or {"from", "to", "step"}.
inline std::vector<double> axis_from_json(const json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw config_error(where + " entries must be numbers");
      out.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    detail::check_keys(j, {"from", "to", "step"}, where);
    const double a = detail::num(j, "from", where), b = detail::num(j, "to", where), s = detail::num(j, "step", where);
    if (!(s > 0.0) || !(b >= a)) throw config_error(where + " needs from <= to and step > 0");
    const auto n = static_cast<long long>(std::floor((b - a) / s + 1e-9));
    for (long long i = 0; i <= n; ++i) out.push_back(a + s * static_cast<double>(i));
  } else {
    throw config_error(where + " must be an array or {from, to, step}");
  }
  if (out.empty()) throw config_error(where + " is empty");
  return out;
}

/// Experiment defaults per subcommand. null means "computed during the run".
inline json default_experiment(std::string_view sub) {
  if (sub == "simulate") return {{"t_start", -100.0}, {"t_end", 100.0}, {"x0", nullptr}, {"stops", json::array()}};
  if (sub == "attractors")
    return {{"gamma", nullptr}, {"window", {-200.0, 200.0}}, {"pullback", true}, {"output_step", 0.5}};
  if (sub == "classify") return json::object();
  if (sub == "critical-rate") return {{"bracket", {0.5, 2.0}}, {"tol", 1e-6}};
  if (sub == "lyapunov") return {{"gamma", nullptr}, {"role", nullptr}, {"window", 2000.0}};
  if (sub == "ftle")
    return {{"T", 50.0}, {"t_min", -400.0}, {"t_max", 400.0}, {"step", 0.1}, {"kappa", 0.6}, {"L", nullptr},
            {"lyapunov_window", 2000.0}};
  if (sub == "ews-region")
    return {{"T", 50.0},
            {"kappas", {{"from", 0.0}, {"to", 0.9}, {"step", 0.1}}},
            {"rates", {{"from", 0.1}, {"to", 2.0}, {"step", 0.1}}},
            {"t_min", -400.0},
            {"t_max", 400.0},
            {"step", 0.1},
            {"L", nullptr},
            {"lyapunov_window", 2000.0}};
  if (sub == "bifurcation-map")
    return {{"rates", json::array({1.0})}, {"phases", json::array({0.0})},
            {"tol", 1e-4}, {"bracket", {-0.5, 0.5}}, {"sign", -1.0}};
  if (sub == "safe-points")
    return {{"delta", nullptr},
            {"d", 1.0},
            {"c0", nullptr},
            {"c0_bracket", {10.0, 30.0}},
            {"c0_tol", 1e-6},
            {"c_star", nullptr},
            {"t0", 0.0},
            {"grid", {{"from", -10.0}, {"to", 5.0}, {"step", 0.05}}}};
  if (sub == "reaction-region")
    return {{"delta", nullptr},
            {"strengths", {{"from", 0.0}, {"to", 1.8}, {"step", 0.2}}},
            {"kappas", {{"from", 0.0}, {"to", 0.9}, {"step", 0.1}}},
            {"b", 1.0},
            {"T", 50.0},
            {"L", nullptr},
            {"lyapunov_window", 2000.0},
            {"t_min", -400.0},
            {"t_max", 400.0},
            {"step", 0.1}};
  throw config_error("unknown subcommand '" + std::string(sub) + "'");
}

/// Applies `key.path=value`. The value is parsed as JSON when possible and
/// taken as a string otherwise.
inline void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw config_error("--set expects key=value, got '" + std::string(assignment) + "'");
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw config_error("empty component in --set path '" + path + "'");
    if (!node->is_object()) throw config_error("--set path '" + path + "' runs through a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    pos = dot + 1;
  }
}

/// Fills defaults, expands presets into explicit fields and validates every
/// block. The result is the manifest's config section.
inline json resolve(const json& input, std::string_view subcommand) {
  if (!input.is_object()) throw config_error("config document must be a JSON object");
  for (const auto& [k, v] : input.items()) {
    if (k != "model" && k != "mechanism" && k != "numerics" && k != "experiment" && k != "output" && k != "run") {
      throw config_error("unknown top-level key '" + k + "'");
    }
  }
  json out = json::object();
  out["model"] = model_to_json(model_from_json(detail::need(input, "model", "config")));

  const json& mech_in = detail::need(input, "mechanism", "config");
  json mech = mech_in;
  mechanism_from_json(mech);  // validation
  mech["profile"] = profile_to_json(profile_from_json(mech_in["profile"], "mechanism.profile"));
  if (mech.contains("delta")) mech["delta"] = profile_to_json(profile_from_json(mech_in["delta"], "mechanism.delta"));
  out["mechanism"] = mech;

  json num = default_numerics();
  if (input.contains("numerics")) {
    detail::check_against(input["numerics"], num, "numerics");
    detail::merge(num, input["numerics"]);
  }
  numerics_from_json(num);
  threads_from_json(num);
  out["numerics"] = num;

  json exp = default_experiment(subcommand);
  if (input.contains("experiment")) {
    detail::check_against(input["experiment"], exp, "experiment");
    detail::merge(exp, input["experiment"]);
  }
  if (exp.contains("delta") && !exp["delta"].is_null()) {
    exp["delta"] = profile_to_json(profile_from_json(exp["delta"], "experiment.delta"));
  }
  out["experiment"] = exp;

  json output = {{"dir", "out"}};
  if (input.contains("output")) {
    detail::check_keys(input["output"], {"dir"}, "output");
    detail::merge(output, input["output"]);
  }
  out["output"] = output;
  return out;
}

}  // namespace tipping::config

#endif  // TIPPING_CONFIG_HPP
