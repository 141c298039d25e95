// mqigame: command-line front end.
//
// Exit codes: 0 ok, 1 invalid input, 2 numerical failure or missed
// reproduction tolerance, 3 structural failure.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mqigame/mqigame.hpp"

namespace {

using namespace mqi;

struct Options {
  std::string command;
  std::string instance;
  std::string out;
  std::string format = "text";
  std::string strategy;
  std::string space = "feedback";
  std::string target;
  int team = 1;
  std::uint64_t seed = 1;
  std::uint64_t samples = 100000;
  double tol = 1e-6;
  bool feedforward_only = false;
};

json config_json(const Options& o) {
  json j = json::object();
  j["command"] = o.command;
  if (!o.target.empty()) j["target"] = o.target;
  if (!o.instance.empty()) j["instance"] = o.instance;
  j["format"] = o.format;
  if (!o.out.empty()) j["out"] = o.out;
  if (o.command == "best-response" || o.command == "verify-nash" ||
      o.command == "simulate")
    j["strategy"] = o.strategy.empty() ? "equilibrium" : o.strategy;
  if (o.command == "best-response" || o.command == "verify-nash")
    j["space"] = o.space;
  if (o.command == "best-response") j["team"] = o.team;
  if (o.command == "verify-nash") j["tol"] = o.tol;
  if (o.command == "simulate") {
    j["seed"] = o.seed;
    j["samples"] = o.samples;
  }
  if (o.command == "solve") j["feedforward_only"] = o.feedforward_only;
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProblemInstance load_instance(const Options& o) {
  if (o.instance.empty()) throw ValidationError("--instance is required");
  return parse_instance(read_file(o.instance));
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.out);
  if (!out) throw ValidationError("cannot write " + o.out);
  out << text;
}

void require_format(const Options& o, std::set<std::string> allowed) {
  if (!allowed.count(o.format))
    throw ValidationError("format '" + o.format + "' is not supported by " +
                          o.command);
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

std::string matrix_text(const Matrix& m) {
  std::ostringstream ss;
  ss << std::setprecision(6);
  for (Index i = 0; i < m.rows(); ++i) {
    ss << "  ";
    for (Index j = 0; j < m.cols(); ++j)
      ss << std::setw(12) << m(i, j) << (j + 1 < m.cols() ? " " : "");
    ss << '\n';
  }
  return ss.str();
}

json report_json(const CheckReport& r) {
  json j = json::object();
  j["pass"] = r.pass();
  json checks = json::array();
  for (const auto& c : r.checks) {
    json e = json::object();
    e["name"] = c.name;
    e["min_eigenvalue"] = c.min_eigenvalue;
    e["tolerance"] = c.tolerance;
    e["pass"] = c.pass;
    checks.push_back(e);
  }
  j["checks"] = checks;
  return j;
}

json mqi_json(const Game& game, const QiReport& r) {
  json j = json::object();
  j["mqi"] = r.invariant;
  j["total_violations"] = r.total_violations;
  json v = json::array();
  for (const auto& w : r.violations) {
    json e = json::object();
    e["row"] = w.row;
    e["col"] = w.col;
    e["path"] = describe(w, game.instance.n, game.instance.m1,
                         game.instance.m2, game.instance.N);
    v.push_back(e);
  }
  j["violations"] = v;
  return j;
}

json checks_json(const std::vector<repro::Check>& checks) {
  json out = json::array();
  for (const auto& c : checks) {
    json e = json::object();
    e["name"] = c.name;
    e["value"] = c.value;
    e["target"] = c.target;
    e["tolerance"] = c.tolerance;
    e["pass"] = c.pass;
    out.push_back(e);
  }
  return out;
}

std::string checks_text(const std::vector<repro::Check>& checks) {
  std::ostringstream ss;
  for (const auto& c : checks)
    ss << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << fmt(c.value, 8)
       << " (target " << fmt(c.target, 8) << " +/- " << fmt(c.tolerance, 3)
       << ")\n";
  return ss.str();
}

std::string structure_label(const StructureSpec& s) {
  switch (s.kind) {
    case StructureKind::full_information: return "FI";
    case StructureKind::delayed_sharing: return "1SDIS";
    case StructureKind::decentralized: return "DP1";
    case StructureKind::explicit_mask: return "explicit";
  }
  return "?";
}

std::string instance_label(const ProblemInstance& p) {
  const std::string a = structure_label(p.structure1);
  const std::string b = structure_label(p.structure2);
  return a == b ? a : a + "/" + b;
}

// Strategy given by --strategy, or the equilibrium pair of the instance.
StrategyPair load_strategy(const Options& o, const Game& game) {
  if (!o.strategy.empty()) {
    json j;
    try {
      j = json::parse(read_file(o.strategy));
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("strategy is not valid JSON: ") +
                            e.what());
    }
    StrategyPair pair = strategy_from_json(j);
    std::visit(
        [&](const auto& s) {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>,
                                       FeedforwardPair>)
            detail::check_pair_shape(game.lifted, s.Q1, s.Q2, "strategy");
          else
            detail::check_pair_shape(game.lifted, s.K1, s.K2, "strategy");
        },
        pair);
    return pair;
  }
  const EquilibriumResult r = solve_game(game);
  return *r.K;
}

int run_lift(const Options& o) {
  require_format(o, {"text", "json", "csv"});
  const ProblemInstance p = load_instance(o);
  const LiftedGame g = lift(p);
  const CheckReport a1 = assumption1_static(g);
  if (o.format == "csv") {
    if (o.out.empty())
      throw ValidationError("--format csv needs --out DIR for the matrices");
    for (const auto& path : write_lifted_csv(g, o.out))
      std::cerr << "wrote " << path.string() << '\n';
    return 0;
  }
  if (o.format == "json") {
    json j = json::object();
    j["n"] = g.n;
    j["m1"] = g.m1;
    j["m2"] = g.m2;
    j["N"] = g.N;
    j["P11"] = detail::matrix_to_json(g.P11);
    j["P12"] = detail::matrix_to_json(g.P12);
    j["P13"] = detail::matrix_to_json(g.P13);
    j["W"] = detail::matrix_to_json(g.W);
    j["assumption1"] = report_json(a1);
    if (p.zero_sum) j["assumption1_zerosum"] = report_json(assumption1_zerosum(g));
    emit(o, j.dump(2) + "\n");
    return 0;
  }
  std::ostringstream ss;
  ss << "lifted sizes: x " << g.states() << ", u " << g.inputs(Team::one)
     << ", v " << g.inputs(Team::two) << '\n';
  for (const auto& c : a1.checks)
    ss << (c.pass ? "PASS " : "FAIL ") << c.name << " min eig "
       << fmt(c.min_eigenvalue) << '\n';
  emit(o, ss.str());
  return 0;
}

int run_check_mqi(const Options& o) {
  require_format(o, {"text", "json"});
  const Game game = make_game(load_instance(o));
  const QiReport r = is_mqi(game.s1, game.s2, game.lifted.plant);
  if (o.format == "json") {
    emit(o, mqi_json(game, r).dump(2) + "\n");
    return 0;
  }
  std::ostringstream ss;
  ss << "MQI: " << (r.invariant ? "true" : "false") << '\n';
  for (const auto& w : r.violations)
    ss << "violation: " << describe(w, game.instance.n, game.instance.m1,
                                    game.instance.m2, game.instance.N)
       << '\n';
  if (r.total_violations > r.violations.size())
    ss << "(" << r.total_violations - r.violations.size()
       << " more violations not shown)\n";
  emit(o, ss.str());
  return 0;
}

int run_solve(const Options& o) {
  require_format(o, {"text", "json"});
  const Game game = make_game(load_instance(o));
  const EquilibriumResult r = solve_game(game, {!o.feedforward_only});
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  if (o.format == "json") {
    json j = json::object();
    j["Q1"] = detail::matrix_to_json(r.Q.Q1);
    j["Q2"] = detail::matrix_to_json(r.Q.Q2);
    j["J1"] = r.J1;
    j["J2"] = r.J2;
    j["residual_max"] = r.residual_max;
    j["condition_estimate"] = r.condition_estimate;
    j["assumption1"] = report_json(r.assumption1);
    if (r.assumption1_zerosum)
      j["assumption1_zerosum"] = report_json(*r.assumption1_zerosum);
    j["mqi"] = r.mqi.invariant;
    if (r.K) {
      j["K1"] = detail::matrix_to_json(r.K->K1);
      j["K2"] = detail::matrix_to_json(r.K->K2);
      j["J1_feedback"] = r.J1_fb;
      j["J2_feedback"] = r.J2_fb;
    }
    emit(o, j.dump(2) + "\n");
    return 0;
  }
  std::ostringstream ss;
  ss << "Q1 =\n" << matrix_text(r.Q.Q1) << "Q2 =\n" << matrix_text(r.Q.Q2);
  if (r.K) ss << "K1 =\n" << matrix_text(r.K->K1) << "K2 =\n" << matrix_text(r.K->K2);
  ss << "J1 = " << fmt(r.J1, 10) << "\nJ2 = " << fmt(r.J2, 10)
     << "\nresidual = " << fmt(r.residual_max, 3)
     << "\ncondition = " << fmt(r.condition_estimate, 3) << '\n';
  emit(o, ss.str());
  return 0;
}

StrategySpace parse_space(const std::string& s) {
  return s == "feedforward" ? StrategySpace::feedforward
                            : StrategySpace::feedback;
}

int run_best_response(const Options& o) {
  require_format(o, {"text", "json"});
  const Game game = make_game(load_instance(o));
  const StrategyPair pair = load_strategy(o, game);
  const Team team = o.team == 1 ? Team::one : Team::two;
  const LiftedGame& g = game.lifted;

  Matrix strategy;
  double before = 0.0, after = 0.0;
  if (parse_space(o.space) == StrategySpace::feedback) {
    const FeedbackPair k = std::holds_alternative<FeedbackPair>(pair)
                               ? std::get<FeedbackPair>(pair)
                               : to_feedback(g, std::get<FeedforwardPair>(pair));
    const auto br = best_response_fb(g, game.pattern(team), k, team);
    strategy = br.strategy;
    before = cost_fb(g, k, team);
    after = br.cost;
  } else {
    const FeedforwardPair q = std::holds_alternative<FeedforwardPair>(pair)
                                  ? std::get<FeedforwardPair>(pair)
                                  : to_feedforward(g, std::get<FeedbackPair>(pair));
    const auto br = best_response_ff(g, game.pattern(team), q, team);
    strategy = br.strategy;
    before = cost_ff(g, q, team);
    after = br.cost;
  }
  const std::string name =
      std::string(o.space == "feedback" ? "K" : "Q") + std::to_string(o.team);
  if (o.format == "json") {
    json j = json::object();
    j["team"] = o.team;
    j["space"] = o.space;
    j[name] = detail::matrix_to_json(strategy);
    j["cost_before"] = before;
    j["cost"] = after;
    j["improvement"] = before - after;
    emit(o, j.dump(2) + "\n");
    return 0;
  }
  std::ostringstream ss;
  ss << name << "* =\n" << matrix_text(strategy) << "cost " << fmt(before, 10)
     << " -> " << fmt(after, 10) << " (improvement " << fmt(before - after, 6)
     << ")\n";
  emit(o, ss.str());
  return 0;
}

int run_verify_nash(const Options& o) {
  require_format(o, {"text", "json"});
  if (!(o.tol > 0.0)) throw ValidationError("--tol must be positive");
  const Game game = make_game(load_instance(o));
  const StrategyPair pair = load_strategy(o, game);
  const NashVerification v = verify_nash(game, pair, parse_space(o.space), o.tol);
  const bool fb = v.space == StrategySpace::feedback;
  if (o.format == "json") {
    const auto br = [&](int i) {
      json s = json::object();
      s["form"] = to_string(v.space);
      s[std::string(fb ? "K" : "Q") + std::to_string(i + 1)] =
          detail::matrix_to_json(v.best_response[i]);
      s["cost"] = v.response_cost[i];
      return s;
    };
    json j = json::object();
    j["space"] = to_string(v.space);
    j["is_nash"] = v.is_nash;
    j["delta1"] = v.delta[0];
    j["delta2"] = v.delta[1];
    j["br1"] = br(0);
    j["br2"] = br(1);
    j["tolerance"] = v.relative_tolerance;
    emit(o, j.dump(2) + "\n");
    return 0;
  }
  std::ostringstream ss;
  ss << "space: " << to_string(v.space) << "\nis_nash: "
     << (v.is_nash ? "true" : "false") << '\n';
  for (int i = 0; i < 2; ++i)
    ss << "team " << i + 1 << ": cost " << fmt(v.cost[i], 10)
       << ", best response " << fmt(v.response_cost[i], 10) << ", delta "
       << fmt(v.delta[i], 6) << " (tol " << fmt(v.tolerance[i], 3) << ")\n";
  emit(o, ss.str());
  return 0;
}

int run_simulate(const Options& o) {
  require_format(o, {"text", "json", "csv"});
  if (o.samples < 1) throw ValidationError("--samples must be >= 1");
  const Game game = make_game(load_instance(o));
  const StrategyPair pair = load_strategy(o, game);
  SimulationReport rep = rollout_cost(game.instance, pair, o.samples, o.seed);
  for (Team t : {Team::one, Team::two})
    rep.analytic[team_index(t)] = std::visit(
        [&](const auto& s) {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>,
                                       FeedforwardPair>)
            return cost_ff(game.lifted, s, t);
          else
            return cost_fb(game.lifted, s, t);
        },
        pair);

  const int n = game.instance.n;
  // bar-chart order: u right after x1
  std::vector<int> order{0, n};
  for (int i = 1; i < n; ++i) order.push_back(i);
  order.push_back(n + 1);

  if (o.format == "csv") {
    std::ostringstream ss;
    ss << "structure,term,value\n" << std::setprecision(17);
    for (int i : order)
      ss << instance_label(game.instance) << ',' << rep.labels[i] << ','
         << rep.term_mean[0](i) << '\n';
    emit(o, ss.str());
    return 0;
  }
  if (o.format == "json") {
    json j = json::object();
    j["samples"] = rep.samples;
    j["seed"] = rep.seed;
    json teams = json::array();
    for (int t = 0; t < 2; ++t) {
      json e = json::object();
      e["team"] = t + 1;
      e["mean"] = rep.mean[t];
      e["standard_error"] = rep.standard_error[t];
      e["analytic"] = rep.analytic[t];
      json terms = json::object();
      for (int i : order) {
        json term = json::object();
        term["mean"] = rep.term_mean[t](i);
        term["standard_error"] = rep.term_standard_error[t](i);
        terms[rep.labels[i]] = term;
      }
      e["terms"] = terms;
      teams.push_back(e);
    }
    j["teams"] = teams;
    emit(o, j.dump(2) + "\n");
    return 0;
  }
  std::ostringstream ss;
  ss << rep.samples << " samples, seed " << rep.seed << '\n';
  for (int t = 0; t < 2; ++t) {
    ss << "team " << t + 1 << ": " << fmt(rep.mean[t], 8) << " +/- "
       << fmt(rep.standard_error[t], 3) << " (analytic "
       << fmt(rep.analytic[t], 8) << ")\n";
    for (int i : order)
      ss << "  " << rep.labels[i] << ": " << fmt(rep.term_mean[t](i), 8)
         << " +/- " << fmt(rep.term_standard_error[t](i), 3) << '\n';
  }
  emit(o, ss.str());
  return 0;
}

int run_repro_counterexample(const Options& o) {
  require_format(o, {"text", "json"});
  const auto rep = repro::counterexample();
  const auto& eq = rep.equilibrium;
  if (o.format == "json") {
    json j = json::object();
    j["Q1"] = detail::matrix_to_json(eq.Q.Q1);
    j["Q2"] = detail::matrix_to_json(eq.Q.Q2);
    j["K1"] = detail::matrix_to_json(eq.K->K1);
    j["K2"] = detail::matrix_to_json(eq.K->K2);
    j["K1_deviation"] = detail::matrix_to_json(rep.deviation.strategy);
    j["J1"] = eq.J1;
    j["J1_deviation"] = rep.deviation.cost;
    j["checks"] = checks_json(rep.checks);
    j["pass"] = rep.pass();
    emit(o, j.dump(2) + "\n");
  } else {
    std::ostringstream ss;
    ss << "Q1 =\n" << matrix_text(eq.Q.Q1) << "Q2 =\n" << matrix_text(eq.Q.Q2)
       << "K1 =\n" << matrix_text(eq.K->K1) << "K2 =\n" << matrix_text(eq.K->K2)
       << "K1 deviation =\n" << matrix_text(rep.deviation.strategy)
       << "J1 at equilibrium = " << fmt(eq.J1, 10)
       << "\nJ1 at deviation = " << fmt(rep.deviation.cost, 10) << "\n\n"
       << checks_text(rep.checks);
    emit(o, ss.str());
  }
  return rep.pass() ? 0 : 2;
}

std::string breakdown_csv(const repro::ZeroSumReport& rep) {
  std::ostringstream ss;
  ss << "structure,term,value\n" << std::setprecision(17);
  for (const auto& r : rep.results)
    for (const auto& [term, value] : repro::bar_terms(r.breakdown))
      ss << instances::to_string(r.structure) << ',' << term << ',' << value
         << '\n';
  return ss.str();
}

int run_repro_zero_sum(const Options& o) {
  require_format(o, {"text", "json", "csv"});
  const auto rep = repro::zero_sum();
  if (o.format == "csv") {
    emit(o, breakdown_csv(rep));
  } else if (o.format == "json") {
    json j = json::object();
    json rows = json::array();
    for (const auto& r : rep.results) {
      json e = json::object();
      e["structure"] = instances::to_string(r.structure);
      e["total"] = r.equilibrium.J1;
      json terms = json::object();
      for (const auto& [term, value] : repro::bar_terms(r.breakdown))
        terms[term] = value;
      e["breakdown"] = terms;
      rows.push_back(e);
    }
    j["structures"] = rows;
    j["checks"] = checks_json(rep.checks);
    j["notes"] = rep.notes;
    j["pass"] = rep.pass();
    emit(o, j.dump(2) + "\n");
  } else {
    std::ostringstream ss;
    ss << std::left << std::setw(8) << "" << std::right;
    for (const char* h : {"total", "x1", "u", "x2", "v"})
      ss << std::setw(12) << h;
    ss << '\n';
    for (const auto& r : rep.results) {
      ss << std::left << std::setw(8) << instances::to_string(r.structure)
         << std::right << std::setw(12) << fmt(r.equilibrium.J1);
      for (const auto& [term, value] : repro::bar_terms(r.breakdown))
        ss << std::setw(12) << fmt(value);
      ss << '\n';
    }
    ss << '\n' << checks_text(rep.checks);
    for (const auto& n : rep.notes) ss << "note: " << n << '\n';
    emit(o, ss.str());
  }
  return rep.pass() ? 0 : 2;
}

int dispatch(const Options& o) {
  if (o.command == "lift") return run_lift(o);
  if (o.command == "check-mqi") return run_check_mqi(o);
  if (o.command == "solve") return run_solve(o);
  if (o.command == "best-response") return run_best_response(o);
  if (o.command == "verify-nash") return run_verify_nash(o);
  if (o.command == "simulate") return run_simulate(o);
  if (o.target == "counterexample") return run_repro_counterexample(o);
  return run_repro_zero_sum(o);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Two-team LQ dynamic games with decentralized information"};
  app.require_subcommand(1);
  const std::set<std::string> formats{"text", "json", "csv"};

  const auto common = [&](CLI::App* sub, bool needs_instance) {
    auto* inst = sub->add_option("--instance", o.instance, "instance JSON file");
    if (needs_instance) inst->required();
    sub->add_option("--out", o.out, "output file (directory for lift csv)");
    sub->add_option("--format", o.format, "text, json or csv")
        ->check(CLI::IsMember(formats));
  };
  const auto strategy_opts = [&](CLI::App* sub) {
    sub->add_option("--strategy", o.strategy,
                    "strategy pair JSON (default: the equilibrium pair)");
  };
  const auto space_opt = [&](CLI::App* sub) {
    sub->add_option("--space", o.space, "feedforward or feedback")
        ->check(CLI::IsMember({"feedforward", "feedback"}));
  };

  auto* lift_cmd = app.add_subcommand("lift", "build the lifted system");
  common(lift_cmd, true);

  auto* mqi_cmd = app.add_subcommand("check-mqi", "test mutual quadratic invariance");
  common(mqi_cmd, true);

  auto* solve_cmd = app.add_subcommand("solve", "compute the equilibrium");
  common(solve_cmd, true);
  solve_cmd->add_flag("--feedforward-only", o.feedforward_only,
                      "skip the feedback form (no MQI requirement)");

  auto* br_cmd = app.add_subcommand("best-response", "one team's best response");
  common(br_cmd, true);
  strategy_opts(br_cmd);
  space_opt(br_cmd);
  br_cmd->add_option("--team", o.team, "1 or 2")->check(CLI::IsMember({1, 2}));

  auto* nash_cmd = app.add_subcommand("verify-nash", "check a pair for Nash");
  common(nash_cmd, true);
  strategy_opts(nash_cmd);
  space_opt(nash_cmd);
  nash_cmd->add_option("--tol", o.tol, "relative Nash tolerance");

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo rollouts");
  common(sim_cmd, true);
  strategy_opts(sim_cmd);
  sim_cmd->add_option("--seed", o.seed, "64-bit seed");
  sim_cmd->add_option("--samples", o.samples, "number of rollouts");

  auto* repro_cmd = app.add_subcommand("repro", "reproduce a built-in example");
  repro_cmd->add_option("target", o.target, "counterexample or zero-sum")
      ->required()
      ->check(CLI::IsMember({"counterexample", "zero-sum"}));
  repro_cmd->add_option("--out", o.out, "output file");
  repro_cmd->add_option("--format", o.format, "text, json or csv")
      ->check(CLI::IsMember(formats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  o.command = app.get_subcommands().front()->get_name();

  std::cerr << "config: " << config_json(o).dump() << '\n';
  try {
    return dispatch(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::validation: return 1;
      case ErrorKind::numerical: return 2;
      case ErrorKind::structural: return 3;
    }
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
