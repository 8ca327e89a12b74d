#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "fpa/constructions.hpp"
#include "fpa/equilibrium.hpp"
#include "fpa/json_io.hpp"
#include "fpa/learning.hpp"
#include "fpa/smoothness.hpp"
#include "fpa/special_math.hpp"

namespace {

using fpa::Json;
using fpa::Vector;

Vector parse_types(const std::string& csv) {
  Vector out;
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  out.resize(static_cast<int>(vals.size()));
  for (int i = 0; i < out.size(); ++i) out[i] = vals[i];
  return out;
}

int exit_code(fpa::Verdict v) {
  switch (v) {
    case fpa::Verdict::kVerified:
      return 0;
    case fpa::Verdict::kRefuted:
      return 2;
    case fpa::Verdict::kInconclusive:
      return 3;
  }
  return 3;
}

int cmd_bounds(const std::string& types_csv, double eta, bool budgeted,
               const std::string& out_path) {
  const Vector types = parse_types(types_csv);
  const double max_t = types.maxCoeff();
  const double min_t = types.minCoeff();

  const auto rmp = fpa::poa_upper_bound(types, eta, budgeted);

  Json j;
  j["types"] = std::vector<double>(types.data(), types.data() + types.size());
  j["eta"] = eta;
  j["budgeted"] = budgeted;
  j["P_max_type"] = fpa::bound_P(max_t);
  j["rmp_certificate"] = {
      {"objective", rmp.objective},
      {"implied_poa_upper", rmp.implied_poa_upper},
      {"mu", std::vector<double>(rmp.mu.data(), rmp.mu.data() + rmp.mu.size())},
      {"lambda", std::vector<double>(rmp.lambda.data(),
                                     rmp.lambda.data() + rmp.lambda.size())},
      {"delta", std::vector<double>(rmp.delta.data(),
                                    rmp.delta.data() + rmp.delta.size())}};

  std::ostringstream table;
  table << "type set        : " << types_csv << (budgeted ? "  (budgeted)" : "  (budget-free)")
        << "\n";
  table << "eta             : " << eta << "\n";
  table << "rmp upper bound : " << rmp.implied_poa_upper << "\n";

  double upper = rmp.implied_poa_upper;
  std::string lower_note = "no matching lower bound registered";
  double lower = 0.0;
  if (budgeted) {
    j["upper_bound"] = fpa::bound_P(max_t);
    upper = fpa::bound_P(max_t);
    table << "P(max type)     : " << upper << "\n";
    lower = max_t > fpa::theta_threshold()
                ? fpa::bound_P(max_t)
                : 2.0;
    lower_note = max_t > fpa::theta_threshold()
                     ? "common-type budgeted coupled profile"
                     : "two-item budgeted profile (ratio 2)";
  } else if (types.size() == 1) {
    if (eta == 0.0) {
      upper = fpa::bound_Q_common(max_t);
      table << "Q(type)         : " << upper << "\n";
    } else {
      upper = fpa::bound_Pt_eta(max_t, eta);
      table << "P_t(eta)        : " << upper << "\n";
    }
    j["upper_bound"] = upper;
    if (max_t >= 1.0 - std::exp(-1.0)) {
      lower = std::exp(1.0) / (std::exp(1.0) - 1.0 + eta);
      lower_note = "single-item coupled profile";
    } else if (max_t == 0.0) {
      lower = 2.0 - eta;
      lower_note = "two-item value-maximizer profile";
    }
  } else if (min_t == 0.0 && eta == 0.0) {
    upper = fpa::bound_P(max_t);
    j["upper_bound"] = upper;
    table << "P(max type)     : " << upper << "\n";
    lower = fpa::bound_P(max_t);
    lower_note = "hybrid budget-free profile";
  } else if (min_t == 0.0 && max_t == 1.0) {
    upper = fpa::bound_Q_eta(eta);
    j["upper_bound"] = upper;
    table << "Q(eta)          : " << upper << "\n";
  } else if (min_t >= fpa::beta_threshold() && eta == 0.0) {
    upper = fpa::bound_min_type(min_t);
    j["upper_bound"] = upper;
    table << "min-type bound  : " << upper << "\n";
  } else {
    j["upper_bound"] = rmp.implied_poa_upper;
  }
  if (lower > 0.0) {
    j["lower_bound"] = lower;
    table << "lower bound     : " << lower << "  (" << lower_note << ")\n";
  } else {
    table << "lower bound     : " << lower_note << "\n";
  }

  std::cout << table.str();
  if (!out_path.empty()) fpa::save_json(j, out_path);
  return 0;
}

int cmd_learn(double v1, double v2, double sigma1, double sigma2, double r,
              double eps, int rounds, std::uint64_t seed,
              const std::string& algo, const std::string& summary_path,
              const std::string& log_path) {
  fpa::RepeatedGame game;
  game.values = Vector(2);
  game.values << v1, v2;
  game.sigmas = Vector(2);
  game.sigmas << sigma1, sigma2;
  game.reserve = r;
  game.increment = eps;
  game.rounds = rounds;

  fpa::LearnerConfig base;
  base.algo = algo == "eps_greedy" ? fpa::LearnerConfig::Algo::kEpsGreedyMeanBased
                                   : fpa::LearnerConfig::Algo::kHedge;
  std::vector<fpa::LearnerConfig> configs(2, base);
  configs[0].seed = seed;
  configs[1].seed = seed + 0x51ed270b0741d668ULL;

  const auto history = run_repeated(game, configs);
  const double window = 0.25;

  Json j;
  j["rounds"] = rounds;
  j["seed"] = seed;
  j["algorithm"] = algo;
  Json regrets = Json::array();
  for (int i = 0; i < 2; ++i) regrets.push_back(fpa::regret(game, history, i));
  j["regret"] = regrets;
  j["sold_fraction"] = fpa::well_supported_fraction(history, r);
  j["sold_fraction_final_window"] =
      fpa::well_supported_fraction_window(history, r, window);
  j["cce_epsilon_final_window"] =
      fpa::empirical_cce_epsilon(game, history, window);
  const auto support = fpa::window_support(game, history, window);
  const auto dominated = fpa::co_undominated_check(game, support);
  j["dominated_support_actions"] = dominated.size();

  std::cout << j.dump(2) << "\n";
  if (!summary_path.empty()) fpa::save_json(j, summary_path);
  if (!log_path.empty()) {
    std::ofstream out(log_path);
    out << fpa::history_csv(game, history);
  }
  return 0;
}

int cmd_brute_poa(const std::string& types_csv, bool budgeted, int samples,
                  double grid, std::uint64_t seed, int n_max, int m_max,
                  const std::string& out_path) {
  const Vector types = parse_types(types_csv);
  const double max_t = types.maxCoeff();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double worst = 1.0;
  Json worst_case;
  int verified = 0;

  for (int s = 0; s < samples; ++s) {
    std::uniform_int_distribution<int> pick_n(2, n_max);
    std::uniform_int_distribution<int> pick_m(1, m_max);
    const int n = pick_n(rng);
    const int m = pick_m(rng);

    std::vector<fpa::Valuation> vals;
    Vector sigmas(n), budgets(n);
    for (int i = 0; i < n; ++i) {
      Vector v(m);
      for (int k = 0; k < m; ++k) {
        v[k] = std::round(unif(rng) / grid) * grid;
      }
      vals.push_back(fpa::Valuation::additive(v));
      sigmas[i] = types[static_cast<int>(unif(rng) * types.size()) %
                        types.size()];
      budgets[i] = budgeted ? std::max(grid, std::round((0.2 + 1.3 * unif(rng)) /
                                                        grid) *
                                                 grid)
                            : fpa::kInf;
    }
    fpa::Instance inst;
    try {
      inst = fpa::Instance::make(n, m, Vector::Zero(m), vals, sigmas, budgets);
    } catch (const std::exception&) {
      continue;
    }

    const auto brd = fpa::best_response_dynamics(inst, grid, 60, rng());
    if (!brd.fixed_point) continue;

    const auto profile = fpa::deterministic_profile(brd.final_bids);
    fpa::VerifyOptions options;
    options.tol = 1e-7;
    options.grid_step = grid;
    const auto report = fpa::verify_cce(inst, profile, options);
    if (report.verdict != fpa::Verdict::kVerified) continue;
    ++verified;
    if (report.opt > 1e-9 && report.ratio > worst) {
      worst = report.ratio;
      worst_case = fpa::to_json(inst);
    }
  }

  Json j;
  j["types"] = types_csv;
  j["budgeted"] = budgeted;
  j["samples"] = samples;
  j["verified_equilibria"] = verified;
  j["worst_ratio"] = worst;
  j["bound_P"] = fpa::bound_P(max_t);
  if (!budgeted && types.size() == 1) j["bound_Q"] = fpa::bound_Q_common(max_t);
  if (!worst_case.is_null()) j["worst_instance"] = worst_case;
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) fpa::save_json(j, out_path);

  const double cap = budgeted || types.size() > 1
                         ? fpa::bound_P(max_t)
                         : fpa::bound_Q_common(max_t);
  return worst <= cap + 0.02 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous first-price auctions with constrained autobidders"};
  app.require_subcommand(1);

  // bounds
  std::string types_csv = "1";
  double eta = 0.0;
  bool budgeted = false, budget_free = false;
  std::string out_path;
  auto* bounds = app.add_subcommand("bounds", "Evaluate welfare-ratio bounds");
  bounds->add_option("--types", types_csv, "Comma-separated agent types");
  bounds->add_option("--eta", eta, "Smallest relative reserve gap");
  bounds->add_flag("--budgeted", budgeted, "Agents have budgets");
  bounds->add_flag("--budget-free", budget_free, "No budget constraints");
  bounds->add_option("--json", out_path, "Write the report as JSON");

  // curves
  std::string which = "fig1a";
  int points = 200;
  std::string curve_out = "curves.csv";
  auto* curves = app.add_subcommand("curves", "Emit bound curves as CSV");
  curves->add_option("--which", which, "fig1a | fig1b | q_eta");
  curves->add_option("--points", points, "Points per curve");
  curves->add_option("--out", curve_out, "Output CSV path")->required();

  // verify-construction
  std::string cname;
  std::string params_json = "{}";
  double tol = 1e-7;
  auto* vc = app.add_subcommand("verify-construction",
                                "Verify a registered worst-case market");
  vc->add_option("--name", cname, "Construction name")->required();
  vc->add_option("--params", params_json, "Parameter overrides as JSON");
  vc->add_option("--tol", tol, "Equilibrium tolerance");
  vc->add_option("--json", out_path, "Write the report as JSON");

  // verify-profile
  std::string instance_path, profile_path;
  double grid_step = 1e-3;
  auto* vp = app.add_subcommand("verify-profile",
                                "Verify a user instance and bid profile");
  vp->add_option("--instance", instance_path, "Instance JSON")->required();
  vp->add_option("--profile", profile_path, "Profile JSON")->required();
  vp->add_option("--tol", tol, "Equilibrium tolerance");
  vp->add_option("--grid", grid_step, "Deviation grid step");
  vp->add_option("--json", out_path, "Write the report as JSON");

  // proxy
  auto* proxy = app.add_subcommand(
      "proxy", "Emit the budget-free proxy of an instance under a profile");
  proxy->add_option("--instance", instance_path, "Instance JSON")->required();
  proxy->add_option("--profile", profile_path, "Profile JSON")->required();
  proxy->add_option("--out", out_path, "Output instance JSON")->required();

  // learn
  double v1 = 1.0, v2 = 0.5, sigma1 = 1.0, sigma2 = 1.0, reserve = 0.3,
         increment = 0.05;
  int rounds = 50'000;
  std::uint64_t seed = 1;
  std::string algo = "hedge", summary_path, log_path;
  auto* learn = app.add_subcommand("learn", "Run regret-minimizing bidders");
  learn->add_option("--v1", v1, "Value of agent 0");
  learn->add_option("--v2", v2, "Value of agent 1");
  learn->add_option("--sigma1", sigma1, "Type of agent 0");
  learn->add_option("--sigma2", sigma2, "Type of agent 1");
  learn->add_option("--r", reserve, "Reserve price");
  learn->add_option("--eps", increment, "Bid grid increment");
  learn->add_option("--rounds", rounds, "Number of rounds");
  learn->add_option("--seed", seed, "Seed");
  learn->add_option("--algo", algo, "hedge | eps_greedy");
  learn->add_option("--summary", summary_path, "Summary JSON path");
  learn->add_option("--log", log_path, "Round log CSV path");

  // brute-poa
  int samples = 200, n_max = 3, m_max = 3;
  double brute_grid = 0.05;
  auto* brute = app.add_subcommand(
      "brute-poa", "Probe random instances with best-response dynamics");
  brute->add_option("--types", types_csv, "Type set, comma-separated");
  brute->add_flag("--budgeted", budgeted, "Random budgets");
  brute->add_option("--samples", samples, "Instances to sample");
  brute->add_option("--grid", brute_grid, "Bid grid step");
  brute->add_option("--seed", seed, "Seed");
  brute->add_option("--n-max", n_max, "Maximum agents (<= 3)");
  brute->add_option("--m-max", m_max, "Maximum items (<= 3)");
  brute->add_option("--json", out_path, "Write the report as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bounds->parsed()) {
      return cmd_bounds(types_csv, eta, budgeted && !budget_free, out_path);
    }
    if (curves->parsed()) {
      std::ofstream out(curve_out);
      if (!out) throw std::runtime_error("cannot write " + curve_out);
      out << fpa::emit_curves(which, points);
      std::cout << "wrote " << curve_out << "\n";
      return 0;
    }
    if (vc->parsed()) {
      std::map<std::string, double> params;
      for (const auto& [k, v] : Json::parse(params_json).items()) {
        params[k] = v.get<double>();
      }
      const auto report = fpa::verify_construction(cname, params, tol);
      const Json j = fpa::to_json(report);
      std::cout << j.dump(2) << "\n";
      if (!out_path.empty()) fpa::save_json(j, out_path);
      if (!report.passed) {
        return report.equilibrium.verdict == fpa::Verdict::kRefuted ? 2 : 3;
      }
      return 0;
    }
    if (vp->parsed()) {
      const auto inst = fpa::load_instance(instance_path);
      const auto profile = fpa::load_profile(profile_path);
      fpa::VerifyOptions options;
      options.tol = tol;
      options.grid_step = grid_step;
      const auto report = fpa::verify_cce(inst, profile, options);
      const Json j = fpa::to_json(report);
      std::cout << j.dump(2) << "\n";
      if (!out_path.empty()) fpa::save_json(j, out_path);
      return exit_code(report.verdict);
    }
    if (proxy->parsed()) {
      const auto inst = fpa::load_instance(instance_path);
      const auto profile = fpa::load_profile(profile_path);
      fpa::save_json(fpa::to_json(fpa::proxy_instance(inst, profile)), out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
    if (learn->parsed()) {
      return cmd_learn(v1, v2, sigma1, sigma2, reserve, increment, rounds, seed,
                       algo, summary_path, log_path);
    }
    if (brute->parsed()) {
      return cmd_brute_poa(types_csv, budgeted, samples, brute_grid, seed,
                           std::min(n_max, 3), std::min(m_max, 3), out_path);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
