#include "tipping/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "tipping/attractors.hpp"
#include "tipping/classify.hpp"
#include "tipping/ews.hpp"
#include "tipping/integrator.hpp"

namespace tipping::cli {

namespace fs = std::filesystem;
using config::json;

namespace {

// NaN and infinities are not JSON; they are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

json blow_up_json(const std::optional<BlowUp>& b) {
  if (!b) return nullptr;
  return {{"time", number(b->time)}, {"sign", b->sign}};
}

Role main_attractive_role(const VectorFieldModel& m) {
  return m.concavity() == Concavity::d_concave ? Role::upper_attractive : Role::attractive;
}

class Context {
 public:
  Context(std::string sub, json cfg, std::ostream& log)
      : sub_(std::move(sub)), cfg_(std::move(cfg)), log_(log), dir_(cfg_["output"]["dir"].get<std::string>()) {
    model_ = config::model_from_json(cfg_["model"]);
    mechanism_ = config::mechanism_from_json(cfg_["mechanism"]);
    classify_ = config::numerics_from_json(cfg_["numerics"]);
    threads_ = config::threads_from_json(cfg_["numerics"]);
    require_compatible(model_, mechanism_);
    fs::create_directories(dir_);
  }

  const json& exp() const { return cfg_["experiment"]; }
  const VectorFieldModel& model() const { return model_; }
  const TransitionMechanism& mechanism() const { return mechanism_; }
  const ClassifyConfig& classify_config() const { return classify_; }
  const AttractorConfig& attractors() const { return classify_.attractors; }
  unsigned threads() const { return threads_; }
  bool m_cache() const { return cfg_["numerics"]["m_cache"].get<bool>(); }
  json& results() { return results_; }
  std::ostream& log() { return log_; }

  double exp_num(std::string_view key) const { return config::detail::num(exp(), key, "experiment"); }
  bool exp_null(std::string_view key) const { return !exp().contains(key) || exp()[key].is_null(); }
  std::vector<double> exp_axis(std::string_view key) const {
    return config::axis_from_json(config::detail::need(exp(), key, "experiment"), "experiment." + std::string(key));
  }
  Profile exp_profile(std::string_view key) const {
    return config::profile_from_json(config::detail::need(exp(), key, "experiment"), "experiment." + std::string(key));
  }

  /// Mechanism of the configured kind with its rate replaced by c.
  TransitionMechanism with_rate(double c) const {
    json m = cfg_["mechanism"];
    const std::string kind = m["kind"].get<std::string>();
    if (kind != "constant-rate" && kind != "phase" && kind != "size" && kind != "time-dependent-phase") {
      throw config_error("mechanism kind '" + kind + "' has no rate parameter c to vary");
    }
    m["c"] = c;
    return config::mechanism_from_json(m);
  }

  template <class Write>
  void write_file(const std::string& name, Write&& write) {
    const fs::path p = dir_ / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw config_error("cannot open output file " + p.string());
    write(os);
    if (!os) throw numerical_error("failed writing " + p.string());
    outputs_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) {
    write_file(name, [&](std::ostream& os) { os << std::setw(2) << j << '\n'; });
  }

  void write_manifest(int exit_code, double wall) {
    json manifest = cfg_;
    manifest["run"] = {{"tool", "tipping"},
                       {"version", std::string(kVersion)},
                       {"subcommand", sub_},
                       {"exit_code", exit_code},
                       {"wall_time_s", wall},
                       {"environment",
                        {{"compiler", std::string(__VERSION__)},
                         {"cplusplus", static_cast<long>(__cplusplus)},
                         {"threads", threads_}}},
                       {"outputs", outputs_},
                       {"results", results_}};
    std::ofstream os(dir_ / "manifest.json", std::ios::binary);
    os << std::setw(2) << manifest << '\n';
  }

  int code = ExitCode::ok;
  void flag_indeterminate() { code = std::max(code, static_cast<int>(ExitCode::indeterminate)); }
  void flag_failure() { code = static_cast<int>(ExitCode::failure); }

  /// Reference exponent of the past main attractor, unless configured.
  double reference_L() {
    if (!exp_null("L")) return exp_num("L");
    const double T_L = exp_num("lyapunov_window");
    const auto past = lyapunov_of(model_, mechanism_.past_limit(), main_attractive_role(model_), T_L, attractors());
    results_["L"] = number(past.exponent);
    results_["L_source"] = "past limit attractor";
    try {
      const auto fut = lyapunov_of(model_, mechanism_.future_limit(), main_attractive_role(model_), T_L, attractors());
      results_["L_future"] = number(fut.exponent);
    } catch (const std::exception& e) {
      results_["L_future"] = nullptr;
      results_["L_future_error"] = e.what();
    }
    return past.exponent;
  }

 private:
  std::string sub_;
  json cfg_;
  std::ostream& log_;
  fs::path dir_;
  VectorFieldModel model_;
  TransitionMechanism mechanism_;
  ClassifyConfig classify_;
  unsigned threads_ = 1;
  json results_ = json::object();
  std::vector<std::string> outputs_;
};

void write_columns(std::ostream& os, const std::vector<std::string>& header, const std::vector<double>& t,
                   const std::vector<std::function<double(double)>>& cols) {
  os << std::setprecision(17);
  os << "t";
  for (const auto& h : header) os << ',' << h;
  os << '\n';
  for (double s : t) {
    os << s;
    for (const auto& c : cols) os << ',' << c(s);
    os << '\n';
  }
}

std::function<double(double)> sampler(const Trajectory& tr) {
  return [&tr](double t) { return tr.covers(t) ? tr(t) : std::nan(""); };
}

void cmd_simulate(Context& ctx) {
  const double t0 = ctx.exp_num("t_start"), t1 = ctx.exp_num("t_end");
  double x0;
  if (ctx.exp_null("x0")) {
    const auto past = limit_hyperbolic_solutions(ctx.model(), ctx.mechanism().past_limit(),
                                                 Interval{std::min(t0, t1), std::min(t0, t1) + 1.0}, ctx.attractors());
    x0 = past.main_attractive()(t0);
    ctx.results()["x0_source"] = "past limit main attractive estimate";
  } else {
    x0 = ctx.exp_num("x0");
  }
  std::vector<double> stops = ctx.exp()["stops"].empty() ? std::vector<double>{} : ctx.exp_axis("stops");
  const auto& m = ctx.model();
  const auto& mech = ctx.mechanism();
  auto rhs = [&](double t, double x) { return m.f(t, x, mech(t)); };
  const auto tr = integrate(rhs, t0, x0, t1, ctx.attractors().integrator, stops);
  ctx.write_file("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, tr); });
  ctx.results()["x0"] = number(x0);
  ctx.results()["completed"] = tr.completed();
  ctx.results()["final_time"] = number(tr.final_time());
  ctx.results()["final_state"] = number(tr.final_state());
  ctx.results()["blow_up"] = blow_up_json(tr.blow_up());
}

json structure_json(const LimitStructure& s) {
  json est = json::array();
  for (const auto& e : s.estimates) {
    est.push_back({{"role", std::string(to_string(e.role))},
                   {"burn_in", number(e.burn_in)},
                   {"convergence_gap", number(e.convergence_gap)}});
  }
  return {{"gamma", number(s.gamma)},
          {"window", {s.window.lo, s.window.hi}},
          {"complete", s.complete},
          {"separation", number(s.separation)},
          {"note", s.note},
          {"estimates", est}};
}

void write_structure(Context& ctx, const std::string& name, const LimitStructure& s, double step) {
  std::vector<std::string> header;
  std::vector<std::function<double(double)>> cols;
  for (const auto& e : s.estimates) {
    header.emplace_back(to_string(e.role));
    cols.push_back(sampler(e.trajectory));
  }
  const auto grid = uniform_grid(s.window.lo, s.window.hi, step);
  ctx.write_file(name, [&](std::ostream& os) { write_columns(os, header, grid, cols); });
}

void cmd_attractors(Context& ctx) {
  const auto& w = ctx.exp()["window"];
  if (!w.is_array() || w.size() != 2) throw config_error("experiment.window must be [lo, hi]");
  const Interval window{w[0].get<double>(), w[1].get<double>()};
  const double step = ctx.exp_num("output_step");
  if (!ctx.exp_null("gamma")) {
    const auto s = limit_hyperbolic_solutions(ctx.model(), ctx.exp_num("gamma"), window, ctx.attractors());
    write_structure(ctx, "limit.csv", s, step);
    ctx.results()["limit"] = structure_json(s);
    return;
  }
  const auto past = limit_hyperbolic_solutions(ctx.model(), ctx.mechanism().past_limit(), window, ctx.attractors());
  const auto fut = limit_hyperbolic_solutions(ctx.model(), ctx.mechanism().future_limit(), window, ctx.attractors());
  write_structure(ctx, "limit_past.csv", past, step);
  write_structure(ctx, "limit_future.csv", fut, step);
  ctx.results()["past"] = structure_json(past);
  ctx.results()["future"] = structure_json(fut);
  if (!ctx.exp()["pullback"].get<bool>()) return;

  const auto& ac = ctx.attractors();
  const double Th = choose_horizon(ctx.mechanism(), ac);
  const auto pa = limit_hyperbolic_solutions(ctx.model(), ctx.mechanism().past_limit(), Interval{-Th, -Th + 1.0}, ac);
  const auto fu = limit_hyperbolic_solutions(ctx.model(), ctx.mechanism().future_limit(), Interval{Th - 1.0, Th}, ac);
  std::vector<PullbackSolution> sols;
  for (const auto& e : pa.estimates)
    if (is_attractive(e.role)) sols.push_back(pullback_attractive(ctx.model(), ctx.mechanism(), e, Th, ac));
  for (const auto& e : fu.estimates)
    if (!is_attractive(e.role)) sols.push_back(pullback_repulsive(ctx.model(), ctx.mechanism(), e, Th, ac));
  std::vector<std::string> header;
  std::vector<std::function<double(double)>> cols;
  json info = json::array();
  for (const auto& s : sols) {
    header.push_back(std::string(to_string(s.role)) + (is_attractive(s.role) ? "_pullback" : "_pullback_repulsive"));
    cols.push_back(sampler(s.trajectory));
    info.push_back({{"role", std::string(to_string(s.role))},
                    {"anchor_value", number(s.anchor_value)},
                    {"bounded", s.bounded()},
                    {"blow_up", blow_up_json(s.blow_up())},
                    {"anchor_deviation", number(s.anchor.deviation)},
                    {"anchor_insensitive", s.anchor.pass}});
  }
  const auto grid = uniform_grid(-Th, Th, step);
  ctx.write_file("pullback.csv", [&](std::ostream& os) { write_columns(os, header, grid, cols); });
  ctx.results()["horizon"] = Th;
  ctx.results()["pullback"] = info;
}

json label_json(const CaseLabel& l) {
  return {{"case", std::string(to_string(l.label))},
          {"concavity", l.concavity == Concavity::concave ? "concave" : "d-concave"},
          {"horizon", number(l.horizon)},
          {"horizon_capped", l.horizon_capped},
          {"track_tol", number(l.track_tol)},
          {"sep_tol", number(l.sep_tol)},
          {"upper_terminal", number(l.upper_terminal)},
          {"lower_terminal", number(l.lower_terminal)},
          {"future_upper", number(l.future_upper)},
          {"future_middle", number(l.future_middle)},
          {"future_lower", number(l.future_lower)},
          {"upper_distance", number(l.upper_distance)},
          {"lower_distance", number(l.lower_distance)},
          {"repulsive_bounded", l.repulsive_bounded},
          {"repulsive_exit_time", optional_number(l.repulsive_exit_time)},
          {"attractive_blow_up", blow_up_json(l.attractive_blow_up)},
          {"repulsive_blow_up", blow_up_json(l.repulsive_blow_up)},
          {"anchors_insensitive", l.anchors_insensitive},
          {"anchor_deviation", number(l.anchor_deviation)},
          {"note", l.note}};
}

void cmd_classify(Context& ctx) {
  const auto* sw = std::get_if<Switching>(&ctx.mechanism().spec());
  if (sw) {
    const auto r = switching_classify(ctx.model(), ctx.mechanism(), ctx.classify_config());
    const json ev = {{"case", std::string(to_string(r.label))},
                     {"criterion", "switching"},
                     {"attractive_value", number(r.attractive_value)},
                     {"repulsive_value", number(r.repulsive_value)},
                     {"attractive_blow_up", blow_up_json(r.attractive_blow_up)},
                     {"repulsive_blow_up", blow_up_json(r.repulsive_blow_up)},
                     {"horizon", number(r.horizon)}};
    ctx.write_json("evidence.json", ev);
    ctx.results()["case"] = ev["case"];
    ctx.log() << "case=" << to_string(r.label) << '\n';
    return;
  }
  const auto lab = classify(ctx.model(), ctx.mechanism(), ctx.classify_config());
  ctx.write_json("evidence.json", label_json(lab));
  ctx.results()["case"] = std::string(to_string(lab.label));
  ctx.log() << "case=" << to_string(lab.label) << '\n';
  if (!lab.determinate()) ctx.flag_indeterminate();
}

void cmd_critical_rate(Context& ctx) {
  const auto& b = ctx.exp()["bracket"];
  if (!b.is_array() || b.size() != 2) throw config_error("experiment.bracket must be [lo, hi]");
  const auto r = critical_value(ctx.model(), [&](double c) { return ctx.with_rate(c); }, b[0].get<double>(),
                                b[1].get<double>(), ctx.exp_num("tol"), ctx.classify_config());
  const json out = {{"lo", r.lo},           {"hi", r.hi},       {"mid", r.mid()}, {"width", r.width()},
                    {"label_lo", r.label_lo}, {"label_hi", r.label_hi}, {"iterations", r.iterations}};
  ctx.write_json("critical_rate.json", out);
  ctx.results() = out;
  ctx.log() << std::setprecision(12) << "c0 in [" << r.lo << ", " << r.hi << "]\n";
}

Role role_from_string(std::string_view s) {
  for (Role r : {Role::upper_attractive, Role::lower_attractive, Role::middle_repulsive, Role::attractive, Role::repulsive}) {
    if (to_string(r) == s) return r;
  }
  throw config_error("unknown role '" + std::string(s) + "'");
}

void cmd_lyapunov(Context& ctx) {
  const double gamma = ctx.exp_null("gamma") ? ctx.mechanism().past_limit() : ctx.exp_num("gamma");
  const Role role = ctx.exp_null("role") ? main_attractive_role(ctx.model())
                                         : role_from_string(config::detail::str(ctx.exp(), "role", "experiment"));
  const auto est = lyapunov_of(ctx.model(), gamma, role, ctx.exp_num("window"), ctx.attractors());
  const json out = {{"gamma", gamma},
                    {"role", std::string(to_string(role))},
                    {"exponent", number(est.exponent)},
                    {"window", number(est.window)},
                    {"doubled_exponent", number(est.doubled_exponent)},
                    {"sensitivity", number(est.sensitivity)}};
  ctx.write_json("lyapunov.json", out);
  ctx.results() = out;
  ctx.log() << std::setprecision(8) << "L=" << est.exponent << '\n';
}

void cmd_ftle(Context& ctx) {
  const double T = ctx.exp_num("T"), a = ctx.exp_num("t_min"), b = ctx.exp_num("t_max");
  const double L = ctx.reference_L();
  const auto u = upper_pullback(ctx.model(), ctx.mechanism(), T, a, b, ctx.attractors());
  const auto series = ftle_series(ctx.model(), ctx.mechanism(), u, T, uniform_grid(a, b, ctx.exp_num("step")));
  ctx.write_file("ftle.csv", [&](std::ostream& os) { series.write_csv(os); });
  const auto t1 = warning_time(series, EwsConfig{ctx.exp_num("kappa"), L, a, b});
  ctx.results()["horizon"] = u.horizon;
  ctx.results()["max_lambda"] = number(series.max());
  ctx.results()["warning_time"] = optional_number(t1);
  ctx.results()["anchor_insensitive"] = u.anchor.pass;
}

void cmd_ews_region(Context& ctx) {
  const double L = ctx.reference_L();
  EwsRegionConfig rc{ctx.classify_config(), ctx.exp_num("step"), ctx.threads()};
  const auto grid = ews_region(ctx.model(), [&](double c) { return ctx.with_rate(c); }, ctx.exp_axis("kappas"),
                               ctx.exp_axis("rates"), ctx.exp_num("T"), L, ctx.exp_num("t_min"),
                               ctx.exp_num("t_max"), rc);
  ctx.write_file("region.csv", [&](std::ostream& os) { grid.write_csv(os); });
  json errors = json::array();
  for (std::size_t k = 0; k < grid.outcomes.size(); ++k)
    if (grid.outcomes[k] == "error") errors.push_back(grid.notes[k]);
  ctx.results()["cell_errors"] = errors;
  if (!errors.empty()) ctx.flag_failure();
}

void cmd_bifurcation_map(Context& ctx) {
  const auto rates = ctx.exp_axis("rates");
  const auto phases = ctx.exp_axis("phases");
  const auto& br = ctx.exp()["bracket"];
  if (!br.is_array() || br.size() != 2) throw config_error("experiment.bracket must be [lo, hi]");
  const std::pair<double, double> bracket{br[0].get<double>(), br[1].get<double>()};
  const double tol = ctx.exp_num("tol"), sign = ctx.exp_num("sign");
  struct Cell {
    double value = std::nan(""), lo = std::nan(""), hi = std::nan("");
    std::string outcome, note;
  };
  std::vector<Cell> cells(rates.size() * phases.size());
  parallel_for(cells.size(), ctx.threads(), [&](std::size_t k) {
    const double c = rates[k / phases.size()], s = phases[k % phases.size()];
    Cell& cell = cells[k];
    try {
      const auto mech = phase_problem(ctx.mechanism().profile(), c, s, sign);
      const auto r = lambda_star(ctx.model(), mech, tol, bracket, ctx.classify_config());
      cell.value = r.value;
      cell.lo = r.lo;
      cell.hi = r.hi;
      cell.outcome = r.hi < 0.0 ? "A" : (r.lo > 0.0 ? "C" : "B");
    } catch (const indeterminate_error& e) {
      cell.outcome = "indeterminate";
      cell.note = e.what();
    } catch (const std::exception& e) {
      cell.outcome = "error";
      cell.note = e.what();
    }
  });
  ctx.write_file("bifurcation_map.csv", [&](std::ostream& os) {
    os << std::setprecision(17) << "c,s,lambda_star,lambda_lo,lambda_hi,outcome\n";
    for (std::size_t k = 0; k < cells.size(); ++k) {
      os << rates[k / phases.size()] << ',' << phases[k % phases.size()] << ',' << cells[k].value << ','
         << cells[k].lo << ',' << cells[k].hi << ',' << cells[k].outcome << '\n';
    }
  });
  json notes = json::array();
  for (const auto& cell : cells) {
    if (cell.outcome == "indeterminate") ctx.flag_indeterminate();
    if (cell.outcome == "error") ctx.flag_failure();
    if (!cell.note.empty()) notes.push_back(cell.note);
  }
  ctx.results()["cell_notes"] = notes;
}

void cmd_safe_points(Context& ctx) {
  const Profile delta = ctx.exp_profile("delta");
  const Profile gamma = ctx.mechanism().profile();
  double c0;
  if (ctx.exp_null("c0")) {
    const auto& b = ctx.exp()["c0_bracket"];
    if (!b.is_array() || b.size() != 2) throw config_error("experiment.c0_bracket must be [lo, hi]");
    const auto r = critical_value(ctx.model(), [&](double c) { return TransitionMechanism(gamma, ConstantRate{c}); },
                                  b[0].get<double>(), b[1].get<double>(), ctx.exp_num("c0_tol"), ctx.classify_config());
    c0 = r.mid();
    ctx.results()["c0_bracket"] = {r.lo, r.hi};
  } else {
    c0 = ctx.exp_num("c0");
  }
  const double c_star = ctx.exp_null("c_star") ? delta.limit_plus() : ctx.exp_num("c_star");
  RepellerCache rc(ctx.m_cache());
  const auto rep = safe_no_return(ctx.model(), gamma, delta, ctx.exp_num("d"), c0, c_star, ctx.exp_num("t0"),
                                  ctx.exp_axis("grid"), ctx.attractors(), &rc);
  ctx.write_file("safepoints.csv", [&](std::ostream& os) { rep.write_csv(os); });
  ctx.results()["c0"] = c0;
  ctx.results()["c_star"] = c_star;
  ctx.results()["no_tipping_possible"] = rep.no_tipping_possible;
  ctx.results()["s1"] = optional_number(rep.s1);
  ctx.results()["first_safe"] = rep.safe.empty() ? json(nullptr) : json(rep.safe.front());
  ctx.results()["first_no_return"] = rep.no_return.empty() ? json(nullptr) : json(rep.no_return.front());
  ctx.results()["conclusion"] = rep.conclusion;
}

void cmd_reaction_region(Context& ctx) {
  const double L = ctx.reference_L();
  ReactionConfig rc{ctx.classify_config(), ctx.exp_num("T"), ctx.exp_num("t_min"), ctx.exp_num("t_max"),
                    ctx.exp_num("step"), ctx.threads()};
  const auto grid = reaction_region(ctx.model(), ctx.mechanism().profile(), ctx.exp_profile("delta"),
                                    ctx.exp_axis("strengths"), ctx.exp_axis("kappas"), ctx.exp_num("b"), L, rc);
  ctx.write_file("region.csv", [&](std::ostream& os) { grid.write_csv(os); });
  json notes = json::array();
  for (std::size_t k = 0; k < grid.outcomes.size(); ++k) {
    if (grid.outcomes[k] == "indeterminate") ctx.flag_indeterminate();
    if (grid.outcomes[k] == "error") ctx.flag_failure();
    if (!grid.notes[k].empty()) notes.push_back(grid.notes[k]);
  }
  ctx.results()["cell_notes"] = notes;
}

}  // namespace

config::json load_document(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot read config file " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw config_error("config file " + path + " is not valid JSON: " + e.what());
  }
}

int run(std::string_view subcommand, const config::json& doc, const std::vector<std::string>& overrides,
        const std::optional<std::string>& out_dir, std::ostream& log) {
  static const std::map<std::string, void (*)(Context&), std::less<>> table = {
      {"simulate", cmd_simulate},           {"attractors", cmd_attractors},
      {"classify", cmd_classify},           {"critical-rate", cmd_critical_rate},
      {"lyapunov", cmd_lyapunov},           {"ftle", cmd_ftle},
      {"ews-region", cmd_ews_region},       {"bifurcation-map", cmd_bifurcation_map},
      {"safe-points", cmd_safe_points},     {"reaction-region", cmd_reaction_region}};
  const auto start = std::chrono::steady_clock::now();
  std::optional<Context> ctx;
  try {
    auto it = table.find(subcommand);
    if (it == table.end()) throw config_error("unknown subcommand '" + std::string(subcommand) + "'");
    json input = doc;
    for (const auto& o : overrides) config::apply_override(input, o);
    if (out_dir) input["output"]["dir"] = *out_dir;
    ctx.emplace(std::string(subcommand), config::resolve(input, subcommand), log);
    it->second(*ctx);
  } catch (const indeterminate_error& e) {
    log << "indeterminate: " << e.what() << '\n';
    if (!ctx) return ExitCode::indeterminate;
    ctx->flag_indeterminate();
    ctx->results()["error"] = e.what();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    if (!ctx) return ExitCode::failure;
    ctx->flag_failure();
    ctx->results()["error"] = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    ctx->write_manifest(ctx->code, wall);
  } catch (const std::exception& e) {
    log << "error: cannot write manifest: " << e.what() << '\n';
    return ExitCode::failure;
  }
  return ctx->code;
}

}  // namespace tipping::cli
