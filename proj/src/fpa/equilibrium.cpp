#include "fpa/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fpa/scenario_eval.hpp"

namespace fpa {

namespace {

double checked_ratio(double opt, double lw) {
  if (lw <= 0) return std::numeric_limits<double>::infinity();
  return opt / lw;
}

}  // namespace

double gain(const Instance& inst, int agent, const Outcome& outcome) {
  return inst.valuations[agent](outcome.bundle[agent]) -
         inst.sigmas[agent] * outcome.payment_of(agent);
}

bool ConstraintReport::feasible(double tol) const {
  return (roi_slack.array() >= -tol).all() &&
         (budget_slack.array() >= -tol).all();
}

ConstraintReport check_feasible(const Instance& inst,
                                const RandomBidProfile& profile) {
  const auto stats = expected_outcome_stats(inst, profile);
  ConstraintReport report;
  report.roi_slack = inst.taus.cwiseProduct(stats.expected_value) -
                     stats.expected_payment;
  report.budget_slack = inst.budgets - stats.expected_payment;
  return report;
}

// ---------------------------------------------------------------------------
// Deviation candidates

namespace {

void add_clause_values(const Valuation& v, int auction, std::set<double>* out) {
  if (v.kind() == Valuation::Kind::kBudgetCapped) {
    add_clause_values(v.inner(), auction, out);
    return;
  }
  for (const auto& c : v.clauses()) out->insert(c[auction]);
}

}  // namespace

DeviationSet DeviationSet::build(const Instance& inst,
                                 const RandomBidProfile& profile,
                                 double grid_step) {
  const auto scenarios = to_scenarios(profile, inst.n, inst.m);
  constexpr double kBump = 1e-6;

  DeviationSet dev;
  dev.bids.assign(inst.n, {});
  for (int i = 0; i < inst.n; ++i) {
    dev.bids[i].assign(inst.m, {});
    for (int j = 0; j < inst.m; ++j) {
      std::set<double> critical{0.0, inst.reserves[j]};
      add_clause_values(inst.valuations[i], j, &critical);
      for (const auto& sc : scenarios) {
        for (int o = 0; o < inst.n; ++o) {
          if (o == i) continue;
          if (sc.map.draws(o, j)) {
            critical.insert(sc.x->lo);
            critical.insert(sc.x->hi);
          } else {
            critical.insert(sc.map.constants(o, j));
          }
        }
      }
      for (const auto& o : inst.tiebreak.overrides) {
        if (o.auction == j) critical.insert(o.value);
      }
      for (const auto& t : inst.tiebreak.thresholds) {
        if (t.auction == j) critical.insert(t.threshold);
      }

      double hi = 0.0;
      for (double c : critical) hi = std::max(hi, c);
      hi += 2.0 * grid_step;

      std::set<double> bids;
      for (double b = 0.0; b <= hi + 1e-12; b += grid_step) bids.insert(b);
      for (double c : critical) {
        if (c < 0) continue;
        bids.insert(c);
        bids.insert(c + kBump);
      }
      dev.bids[i][j].assign(bids.begin(), bids.end());
    }
  }
  return dev;
}

double DeviationSet::combinations(int agent) const {
  double total = 1.0;
  for (const auto& list : bids[agent]) total *= static_cast<double>(list.size());
  return total;
}

// ---------------------------------------------------------------------------
// Deviation expectations

DeviationStats deviation_stats(const Instance& inst,
                               const RandomBidProfile& profile, int agent,
                               const Vector& bid_vector,
                               std::optional<double> value_cap,
                               std::optional<double> sigma_override) {
  if (bid_vector.size() != inst.m) {
    throw std::invalid_argument("deviation_stats: bid vector length");
  }
  const double sigma = sigma_override.value_or(inst.sigmas[agent]);
  DeviationStats out;
  for (auto sc : to_scenarios(profile, inst.n, inst.m)) {
    sc.map.constants.row(agent) = bid_vector.transpose();
    sc.map.draws.row(agent).setConstant(false);
    if (!sc.map.any_draw()) sc.x.reset();
    for (const auto& piece : detail::evaluate_scenario(inst, sc)) {
      double value = inst.valuations[agent](piece.outcome.bundle[agent]);
      if (value_cap) value = std::min(value, *value_cap);
      out.value += piece.prob * value;
      out.payment += piece.payments[agent];
      out.gain += piece.prob * value - sigma * piece.payments[agent];
    }
  }
  return out;
}

double expected_gain_deviation(const Instance& inst,
                               const RandomBidProfile& profile, int agent,
                               const Vector& bid_vector) {
  return deviation_stats(inst, profile, agent, bid_vector).gain;
}

double expected_gain_deviation(const Instance& inst,
                               const RandomBidProfile& profile, int agent,
                               const ParametricBid& draw, int auction,
                               const Vector& other_bids) {
  double total = 0.0;
  for (auto sc : to_scenarios(profile, inst.n, inst.m)) {
    if (!sc.pure()) {
      throw std::runtime_error(
          "expected_gain_deviation: randomized deviation against a "
          "continuous marginal is not integrable here");
    }
    sc.map.constants.row(agent) = other_bids.transpose();
    sc.map.draws.row(agent).setConstant(false);
    sc.map.draws(agent, auction) = true;
    sc.x = draw;
    for (const auto& piece : detail::evaluate_scenario(inst, sc)) {
      total += piece.prob * inst.valuations[agent](piece.outcome.bundle[agent]) -
               inst.sigmas[agent] * piece.payments[agent];
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

struct DevAtom {
  double bid = 0.0;
  double gain = 0.0;
  double value = 0.0;
  double payment = 0.0;
};

// Lagrangian value of the constrained best-deviation problem at multipliers
// (u, w): an upper bound on the gain of every mixture of the atoms that
// meets E[payment] <= tau E[value] and E[payment] <= budget.
double dual_value(const std::vector<std::vector<DevAtom>>& groups, double tau,
                  double budget, double u, double w) {
  double total = std::isinf(budget) ? 0.0 : w * budget;
  for (const auto& group : groups) {
    double best = -kInf;
    for (const auto& a : group) {
      best = std::max(best, a.gain - u * (a.payment - tau * a.value) -
                                w * a.payment);
    }
    total += best;
  }
  return total;
}

double golden_min_u(const std::vector<std::vector<DevAtom>>& groups, double tau,
                    double budget, double w, double* best_seen) {
  // The map u -> dual value is convex; search on a log-warped axis.
  const double lo = 0.0, hi = std::log1p(1e12);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  auto eval = [&](double s) {
    const double v = dual_value(groups, tau, budget, std::expm1(s), w);
    *best_seen = std::min(*best_seen, v);
    return v;
  };
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < 120; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = eval(x2);
    }
  }
  return std::expm1(0.5 * (a + b));
}

double dual_bound(const std::vector<std::vector<DevAtom>>& groups, double tau,
                  double budget) {
  double best = dual_value(groups, tau, budget, 0.0, 0.0);
  double w = 0.0;
  double u = golden_min_u(groups, tau, budget, w, &best);
  if (!std::isinf(budget)) {
    for (int pass = 0; pass < 6; ++pass) {
      // Convex in w for fixed u; same warped golden search.
      const double lo = 0.0, hi = std::log1p(1e12);
      const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
      double a = lo, b = hi;
      auto eval = [&](double s) {
        const double v = dual_value(groups, tau, budget, u, std::expm1(s));
        best = std::min(best, v);
        return v;
      };
      double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
      double f1 = eval(x1), f2 = eval(x2);
      for (int it = 0; it < 80; ++it) {
        if (f1 <= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - phi * (b - a);
          f1 = eval(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + phi * (b - a);
          f2 = eval(x2);
        }
      }
      w = std::expm1(0.5 * (a + b));
      u = golden_min_u(groups, tau, budget, w, &best);
    }
  }
  return best;
}

struct AgentCheck {
  double unconstrained_sup = 0.0;
  Vector unconstrained_arg;
  double feasible_bound = 0.0;
  std::optional<std::pair<Vector, DeviationStats>> refutation;
};

bool additive_kind(const Valuation& v) {
  return v.kind() == Valuation::Kind::kAdditive;
}

// Per-auction deviation atoms for agents with additive valuations: win
// events in different auctions depend only on the own bid there, so vector
// deviations decompose.
std::vector<std::vector<DevAtom>> additive_groups(
    const Instance& inst, const std::vector<Scenario>& scenarios, int agent,
    const DeviationSet& dev) {
  std::vector<std::vector<DevAtom>> groups(inst.m);
  const auto& values = inst.valuations[agent].clauses().front();
  for (int j = 0; j < inst.m; ++j) {
    groups[j].reserve(dev.bids[agent][j].size());
    for (double b : dev.bids[agent][j]) {
      double p = 0.0;
      for (const auto& sc : scenarios) {
        p += sc.prob * detail::win_probability(inst, sc, agent, j, b);
      }
      DevAtom atom;
      atom.bid = b;
      atom.value = values[j] * p;
      atom.payment = b * p;
      atom.gain = atom.value - inst.sigmas[agent] * atom.payment;
      groups[j].push_back(atom);
    }
  }
  return groups;
}

AgentCheck check_agent_additive(const Instance& inst,
                                const std::vector<Scenario>& scenarios,
                                int agent, const DeviationSet& dev,
                                double eq_gain, double tol) {
  const auto groups = additive_groups(inst, scenarios, agent, dev);
  AgentCheck out;
  out.unconstrained_arg = Vector::Zero(inst.m);
  Vector roi_safe_arg = Vector::Zero(inst.m);
  const double tau = inst.taus[agent];
  for (int j = 0; j < inst.m; ++j) {
    const DevAtom* best = nullptr;
    const DevAtom* best_safe = nullptr;
    for (const auto& a : groups[j]) {
      if (!best || a.gain > best->gain) best = &a;
      if (a.payment <= tau * a.value + 1e-15 &&
          (!best_safe || a.gain > best_safe->gain)) {
        best_safe = &a;
      }
    }
    out.unconstrained_sup += best->gain;
    out.unconstrained_arg[j] = best->bid;
    roi_safe_arg[j] = best_safe ? best_safe->bid : 0.0;
  }

  if (out.unconstrained_sup <= eq_gain + tol) {
    out.feasible_bound = out.unconstrained_sup;
    return out;
  }
  out.feasible_bound =
      dual_bound(groups, tau, inst.budgets[agent]);

  if (out.feasible_bound > eq_gain + tol) {
    // Look for an explicit feasible refutation among the natural candidates.
    for (const Vector& cand : {out.unconstrained_arg, roi_safe_arg}) {
      RandomBidProfile dummy;  // stats computed from the scenarios directly
      (void)dummy;
      DeviationStats st;
      for (auto sc : scenarios) {
        sc.map.constants.row(agent) = cand.transpose();
        sc.map.draws.row(agent).setConstant(false);
        if (!sc.map.any_draw()) sc.x.reset();
        for (const auto& piece : detail::evaluate_scenario(inst, sc)) {
          const double value = inst.valuations[agent](piece.outcome.bundle[agent]);
          st.value += piece.prob * value;
          st.payment += piece.payments[agent];
          st.gain += piece.prob * value -
                     inst.sigmas[agent] * piece.payments[agent];
        }
      }
      if (st.gain > eq_gain + tol && st.payment <= tau * st.value + tol &&
          st.payment <= inst.budgets[agent] + tol) {
        out.refutation = {cand, st};
        break;
      }
    }
  }
  return out;
}

AgentCheck check_agent_vector(const Instance& inst,
                              const std::vector<Scenario>& scenarios, int agent,
                              const DeviationSet& dev, double eq_gain,
                              double tol, double max_combinations) {
  if (dev.combinations(agent) > max_combinations) {
    throw std::runtime_error(
        "verify: deviation grid too large for a non-additive valuation");
  }
  AgentCheck out;
  out.unconstrained_sup = -kInf;
  const double tau = inst.taus[agent];
  std::vector<DevAtom> atoms;

  std::vector<std::size_t> idx(inst.m, 0);
  Vector cand = Vector::Zero(inst.m);
  const bool all_pure = std::all_of(scenarios.begin(), scenarios.end(),
                                    [](const Scenario& s) { return s.pure(); });
  std::optional<std::pair<Vector, DeviationStats>> best_feasible;
  while (true) {
    for (int j = 0; j < inst.m; ++j) cand[j] = dev.bids[agent][j][idx[j]];

    DeviationStats st;
    if (all_pure) {
      for (const auto& sc : scenarios) {
        double payment = 0.0;
        ItemSet bundle = 0;
        for (int j = 0; j < inst.m; ++j) {
          const double p =
              detail::win_probability(inst, sc, agent, j, cand[j]);
          if (p > 0.0) {  // deterministic scenario: p is 0 or 1
            bundle = with_item(bundle, j);
            payment += cand[j];
          }
        }
        const double value = inst.valuations[agent](bundle);
        st.value += sc.prob * value;
        st.payment += sc.prob * payment;
        st.gain += sc.prob * (value - inst.sigmas[agent] * payment);
      }
    } else {
      for (auto sc : scenarios) {
        sc.map.constants.row(agent) = cand.transpose();
        sc.map.draws.row(agent).setConstant(false);
        if (!sc.map.any_draw()) sc.x.reset();
        for (const auto& piece : detail::evaluate_scenario(inst, sc)) {
          const double value = inst.valuations[agent](piece.outcome.bundle[agent]);
          st.value += piece.prob * value;
          st.payment += piece.payments[agent];
          st.gain += piece.prob * value -
                     inst.sigmas[agent] * piece.payments[agent];
        }
      }
    }

    if (st.gain > out.unconstrained_sup) {
      out.unconstrained_sup = st.gain;
      out.unconstrained_arg = cand;
    }
    const bool feasible = st.payment <= tau * st.value + tol &&
                          st.payment <= inst.budgets[agent] + tol;
    if (feasible && st.gain > eq_gain + tol &&
        (!best_feasible || st.gain > best_feasible->second.gain)) {
      best_feasible = {cand, st};
    }
    DevAtom atom;
    atom.gain = st.gain;
    atom.value = st.value;
    atom.payment = st.payment;
    atoms.push_back(atom);

    int j = inst.m - 1;
    while (j >= 0) {
      if (++idx[j] < dev.bids[agent][j].size()) break;
      idx[j] = 0;
      --j;
    }
    if (j < 0) break;
  }

  if (out.unconstrained_sup <= eq_gain + tol) {
    out.feasible_bound = out.unconstrained_sup;
    return out;
  }
  out.feasible_bound =
      dual_bound({atoms}, tau, inst.budgets[agent]);
  if (out.feasible_bound > eq_gain + tol && best_feasible) {
    out.refutation = best_feasible;
  }
  return out;
}

bool profile_is_product(const RandomBidProfile& profile, int n) {
  if (std::holds_alternative<ProductProfile>(profile)) return true;
  if (const auto* fin = std::get_if<FiniteProfile>(&profile)) {
    if (fin->atoms.size() == 1) return true;
    // Joint support must equal the product of the per-agent marginals.
    auto row_key = [](const Vector& v) {
      std::ostringstream os;
      os.precision(17);
      for (int j = 0; j < v.size(); ++j) os << v[j] << ",";
      return os.str();
    };
    std::vector<std::map<std::string, double>> marginals(n);
    for (const auto& a : fin->atoms) {
      for (int i = 0; i < n; ++i) {
        marginals[i][row_key(a.bids.row(i).transpose())] += a.prob;
      }
    }
    for (const auto& a : fin->atoms) {
      double expected = 1.0;
      for (int i = 0; i < n; ++i) {
        expected *= marginals[i][row_key(a.bids.row(i).transpose())];
      }
      if (std::abs(expected - a.prob) > 1e-9) return false;
    }
    return true;
  }
  const auto& cp = std::get<CoupledProfile>(profile);
  int rows_with_draws = 0;
  for (int i = 0; i < cp.map.draws.rows(); ++i) {
    if (cp.map.draws.row(i).any()) ++rows_with_draws;
  }
  return rows_with_draws <= 1;
}

EquilibriumReport verify_impl(const Instance& inst,
                              const RandomBidProfile& profile,
                              const VerifyOptions& options) {
  inst.validate();
  const auto scenarios = to_scenarios(profile, inst.n, inst.m);
  const auto stats = expected_outcome_stats(inst, profile);

  EquilibriumReport report;
  report.feasibility.roi_slack =
      inst.taus.cwiseProduct(stats.expected_value) - stats.expected_payment;
  report.feasibility.budget_slack = inst.budgets - stats.expected_payment;
  report.profile_feasible = report.feasibility.feasible(options.tol);

  report.eq_gain = stats.expected_value -
                   inst.sigmas.cwiseProduct(stats.expected_payment);
  report.is_product = profile_is_product(profile, inst.n);

  const auto ws = well_supported(inst, profile);
  report.well_supported = ws.well_supported;
  report.unsold_prob = ws.unsold_prob;

  const auto opt = optimal_allocation(inst);
  report.opt = opt.value;
  report.lw = liquid_welfare(inst, profile);
  report.ratio = checked_ratio(report.opt, report.lw);

  if (!report.profile_feasible) {
    report.verdict = Verdict::kRefuted;
    report.detail = "profile violates its ROI or budget constraint";
    report.max_deviation_gain = Vector::Zero(inst.n);
    report.feasible_deviation_bound = Vector::Zero(inst.n);
    return report;
  }

  const DeviationSet dev =
      options.deviations ? *options.deviations
                         : DeviationSet::build(inst, profile, options.grid_step);

  report.max_deviation_gain = Vector::Zero(inst.n);
  report.feasible_deviation_bound = Vector::Zero(inst.n);
  report.epsilon = -kInf;

  std::optional<std::string> refutation;
  for (int i = 0; i < inst.n; ++i) {
    AgentCheck check;
    if (additive_kind(inst.valuations[i])) {
      check = check_agent_additive(inst, scenarios, i, dev, report.eq_gain[i],
                                   options.tol);
    } else {
      check = check_agent_vector(inst, scenarios, i, dev, report.eq_gain[i],
                                 options.tol, options.max_vector_combinations);
    }
    report.max_deviation_gain[i] = check.unconstrained_sup;
    report.feasible_deviation_bound[i] = check.feasible_bound;
    report.epsilon =
        std::max(report.epsilon, check.feasible_bound - report.eq_gain[i]);
    if (check.refutation && !refutation) {
      std::ostringstream os;
      os << "agent " << i << " improves from " << report.eq_gain[i] << " to "
         << check.refutation->second.gain << " with feasible bids [";
      for (int j = 0; j < inst.m; ++j) {
        os << (j ? ", " : "") << check.refutation->first[j];
      }
      os << "]";
      refutation = os.str();
    }
  }

  // Explicit candidate mixtures (weighted pure vectors) for refutation.
  for (const auto& [agent, mixtures] : options.candidate_mixtures) {
    if (refutation) break;
    for (const auto& mix : mixtures) {
      DeviationStats st;
      double weight = 0.0;
      for (const auto& [w, bids] : mix) {
        const auto s = deviation_stats(inst, profile, agent, bids);
        st.gain += w * s.gain;
        st.value += w * s.value;
        st.payment += w * s.payment;
        weight += w;
      }
      if (std::abs(weight - 1.0) > 1e-9) {
        throw std::invalid_argument("candidate mixture weights must sum to 1");
      }
      if (st.gain > report.eq_gain[agent] + options.tol &&
          st.payment <= inst.taus[agent] * st.value + options.tol &&
          st.payment <= inst.budgets[agent] + options.tol) {
        std::ostringstream os;
        os << "agent " << agent << " improves from " << report.eq_gain[agent]
           << " to " << st.gain << " with a feasible mixed deviation";
        refutation = os.str();
        break;
      }
    }
  }

  report.sufficient_cce = report.epsilon <= options.tol;
  if (refutation) {
    report.verdict = Verdict::kRefuted;
    report.detail = *refutation;
  } else if (report.sufficient_cce) {
    report.verdict = Verdict::kVerified;
  } else {
    report.verdict = Verdict::kInconclusive;
    report.detail =
        "an improving deviation exists in the checked set but no feasible "
        "refutation was found";
  }
  return report;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kVerified:
      return "verified";
    case Verdict::kRefuted:
      return "refuted";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

EquilibriumReport verify_cce(const Instance& inst,
                             const RandomBidProfile& profile,
                             const VerifyOptions& options) {
  return verify_impl(inst, profile, options);
}

EquilibriumReport verify_mne(const Instance& inst,
                             const RandomBidProfile& profile,
                             const VerifyOptions& options) {
  if (!profile_is_product(profile, inst.n)) {
    throw std::invalid_argument("verify_mne: profile is not a product");
  }
  return verify_impl(inst, profile, options);
}

// ---------------------------------------------------------------------------
// Correlated equilibrium (finite support, single swaps)

CeReport verify_ce_finite(const Instance& inst, const FiniteProfile& profile,
                          const VerifyOptions& options) {
  profile.validate();
  CeReport report;

  const DeviationSet dev =
      options.deviations
          ? *options.deviations
          : DeviationSet::build(inst, profile, options.grid_step);

  // Baseline expectations.
  std::vector<Outcome> outcomes;
  outcomes.reserve(profile.atoms.size());
  for (const auto& a : profile.atoms) outcomes.push_back(run_auctions(inst, a.bids));

  for (int i = 0; i < inst.n; ++i) {
    double base_gain = 0.0, base_value = 0.0, base_payment = 0.0;
    for (std::size_t k = 0; k < profile.atoms.size(); ++k) {
      base_gain += profile.atoms[k].prob * gain(inst, i, outcomes[k]);
      base_value +=
          profile.atoms[k].prob * inst.valuations[i](outcomes[k].bundle[i]);
      base_payment += profile.atoms[k].prob * outcomes[k].payment_of(i);
    }

    // Swap targets: the full candidate grid plus, per recommendation, the
    // bid that lifts each auction to its reserve.
    std::vector<Vector> targets;
    if (dev.combinations(i) <= options.max_vector_combinations) {
      std::vector<std::size_t> idx(inst.m, 0);
      while (true) {
        Vector t(inst.m);
        for (int j = 0; j < inst.m; ++j) t[j] = dev.bids[i][j][idx[j]];
        targets.push_back(t);
        int j = inst.m - 1;
        while (j >= 0) {
          if (++idx[j] < dev.bids[i][j].size()) break;
          idx[j] = 0;
          --j;
        }
        if (j < 0) break;
      }
    }

    for (std::size_t k = 0; k < profile.atoms.size(); ++k) {
      const Vector rec = profile.atoms[k].bids.row(i).transpose();
      std::vector<Vector> atom_targets = targets;
      for (int j = 0; j < inst.m; ++j) {
        Vector lifted = rec;
        lifted[j] = std::max(rec[j], inst.reserves[j]);
        atom_targets.push_back(lifted);
      }

      for (const auto& target : atom_targets) {
        // Replace the k-th recommendation only.
        Matrix swapped = profile.atoms[k].bids;
        swapped.row(i) = target.transpose();
        const Outcome o = run_auctions(inst, swapped);
        const double d_gain = profile.atoms[k].prob *
                              (gain(inst, i, o) - gain(inst, i, outcomes[k]));
        const double d_value =
            profile.atoms[k].prob *
            (inst.valuations[i](o.bundle[i]) -
             inst.valuations[i](outcomes[k].bundle[i]));
        const double d_payment =
            profile.atoms[k].prob *
            (o.payment_of(i) - outcomes[k].payment_of(i));

        const double new_payment = base_payment + d_payment;
        const double new_value = base_value + d_value;
        const bool feasible =
            new_payment <= inst.taus[i] * new_value + options.tol &&
            new_payment <= inst.budgets[i] + options.tol;
        if (feasible && d_gain > options.tol &&
            (!report.best || d_gain > report.best->gain_delta)) {
          report.best = SwapImprovement{i, static_cast<int>(k), target, d_gain};
        }
      }
    }
  }

  report.no_improving_swap = !report.best.has_value();
  report.verdict =
      report.no_improving_swap ? Verdict::kVerified : Verdict::kRefuted;
  return report;
}

// ---------------------------------------------------------------------------
// Well-supportedness

WellSupportedReport well_supported(const Instance& inst,
                                   const RandomBidProfile& profile,
                                   double tol) {
  WellSupportedReport report;
  report.unsold_prob = Vector::Zero(inst.m);
  for (const auto& sc : to_scenarios(profile, inst.n, inst.m)) {
    for (const auto& piece : detail::evaluate_scenario(inst, sc)) {
      for (int j = 0; j < inst.m; ++j) {
        if (piece.outcome.winner[j] < 0) report.unsold_prob[j] += piece.prob;
      }
    }
  }
  report.well_supported = report.unsold_prob.maxCoeff() <= tol;
  return report;
}

// ---------------------------------------------------------------------------
// Best-response dynamics

namespace {

std::vector<std::vector<double>> response_grid(const Instance& inst, int agent,
                                               const Matrix& current,
                                               double grid_step) {
  std::vector<std::vector<double>> lists(inst.m);
  for (int j = 0; j < inst.m; ++j) {
    std::set<double> bids{0.0, inst.reserves[j]};
    double hi = inst.reserves[j];
    hi = std::max(hi, inst.valuations[agent].max_entry());
    for (int o = 0; o < inst.n; ++o) {
      if (o != agent) hi = std::max(hi, current(o, j));
    }
    for (double b = 0.0; b <= hi + grid_step + 1e-12; b += grid_step) {
      bids.insert(b);
    }
    for (int o = 0; o < inst.n; ++o) {
      if (o == agent) continue;
      bids.insert(current(o, j));
      bids.insert(current(o, j) + grid_step);
    }
    lists[j].assign(bids.begin(), bids.end());
  }
  return lists;
}

std::string profile_key(const Matrix& bids) {
  std::ostringstream os;
  os.precision(15);
  for (int i = 0; i < bids.rows(); ++i) {
    for (int j = 0; j < bids.cols(); ++j) os << bids(i, j) << ",";
  }
  return os.str();
}

}  // namespace

BrdResult best_response_dynamics(const Instance& inst, double grid_step,
                                 int max_rounds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix bids = Matrix::Zero(inst.n, inst.m);
  for (int i = 0; i < inst.n; ++i) {
    const double hi = std::max(grid_step, inst.valuations[i].max_entry());
    const int steps = static_cast<int>(std::floor(hi / grid_step));
    std::uniform_int_distribution<int> pick(0, steps);
    for (int j = 0; j < inst.m; ++j) bids(i, j) = pick(rng) * grid_step;
  }

  BrdResult result;
  std::map<std::string, int> seen;
  seen[profile_key(bids)] = 0;

  for (int round = 1; round <= max_rounds; ++round) {
    bool moved = false;
    for (int i = 0; i < inst.n; ++i) {
      const auto lists = response_grid(inst, i, bids, grid_step);
      double combos = 1.0;
      for (const auto& l : lists) combos *= static_cast<double>(l.size());
      if (combos > 2e6) {
        throw std::runtime_error("best_response_dynamics: grid too large");
      }

      Vector best = bids.row(i).transpose();
      double best_gain = -kInf;
      std::vector<std::size_t> idx(inst.m, 0);
      Matrix trial = bids;
      while (true) {
        for (int j = 0; j < inst.m; ++j) trial(i, j) = lists[j][idx[j]];
        const Outcome o = run_auctions(inst, trial);
        const double value = inst.valuations[i](o.bundle[i]);
        const double payment = o.payment_of(i);
        if (payment <= inst.taus[i] * value + 1e-9 &&
            payment <= inst.budgets[i] + 1e-9) {
          const double g = value - inst.sigmas[i] * payment;
          if (g > best_gain + 1e-12) {
            best_gain = g;
            best = trial.row(i).transpose();
          }
        }
        int j = inst.m - 1;
        while (j >= 0) {
          if (++idx[j] < lists[j].size()) break;
          idx[j] = 0;
          --j;
        }
        if (j < 0) break;
      }
      if ((best - bids.row(i).transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        bids.row(i) = best.transpose();
        moved = true;
      }
    }
    result.rounds = round;
    if (!moved) {
      result.fixed_point = true;
      break;
    }
    const auto key = profile_key(bids);
    const auto it = seen.find(key);
    if (it != seen.end()) {
      result.cycle_length = round - it->second;
      break;
    }
    seen[key] = round;
  }
  result.final_bids = bids;
  return result;
}

// ---------------------------------------------------------------------------
// Per-agent welfare decomposition residual

double lw_lower_bound_check(const Instance& inst,
                            const RandomBidProfile& profile, int agent,
                            const MixedDeviation& deviation, double delta) {
  const auto stats = expected_outcome_stats(inst, profile);
  const double sighat = inst.budgets[agent] < stats.expected_value[agent]
                            ? 0.0
                            : inst.sigmas[agent];

  double dev_gain = 0.0;
  double weight = 0.0;
  for (const auto& [w, bids] : deviation) {
    dev_gain += w * deviation_stats(inst, profile, agent, bids,
                                    inst.budgets[agent], sighat)
                        .gain;
    weight += w;
  }
  if (std::abs(weight - 1.0) > 1e-9) {
    throw std::invalid_argument("lw_lower_bound_check: weights must sum to 1");
  }

  const double lhs =
      std::min(stats.expected_value[agent], inst.budgets[agent]);
  const double rhs = delta * dev_gain +
                     (1.0 - delta + delta * sighat) *
                         stats.expected_payment[agent];
  return lhs - rhs;
}

}  // namespace fpa
