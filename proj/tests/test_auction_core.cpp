#include <doctest.h>

#include <cmath>
#include <random>

#include "fpa/core.hpp"

using namespace fpa;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Instance two_agent(std::vector<Valuation> vals, Vector reserves, Vector sigmas,
                   Vector budgets, TieBreakRule rule = {}) {
  return Instance::make(2, static_cast<int>(reserves.size()),
                        std::move(reserves), std::move(vals), std::move(sigmas),
                        std::move(budgets), std::move(rule));
}

// Independent enumerator over all item-to-agent assignments (no "unassigned"
// slot; monotone valuations make it equivalent on the argmax value).
double brute_opt(const Instance& inst) {
  double best = 0.0;
  std::vector<int> assign(inst.m, 0);
  while (true) {
    std::vector<ItemSet> bundle(inst.n, 0);
    for (int j = 0; j < inst.m; ++j) {
      bundle[assign[j]] = with_item(bundle[assign[j]], j);
    }
    double value = 0.0;
    for (int i = 0; i < inst.n; ++i) {
      value += std::min(inst.taus[i] * inst.valuations[i](bundle[i]),
                        inst.budgets[i]);
    }
    best = std::max(best, value);
    int j = inst.m - 1;
    while (j >= 0) {
      if (++assign[j] < inst.n) break;
      assign[j] = 0;
      --j;
    }
    if (j < 0) break;
  }
  return best;
}

}  // namespace

TEST_CASE("valuation evaluation by kind") {
  const auto add = Valuation::additive(vec({1.0, 0.3}));
  CHECK(add(0b11) == doctest::Approx(1.3));
  CHECK(add(0) == 0.0);

  const auto xos = Valuation::xos({vec({1.0, 0.0}), vec({0.0, 1.0})});
  // Enumerated clause sums: {1+0, 0+1} -> max is 1.
  CHECK(xos(0b11) == doctest::Approx(1.0));
  CHECK(xos(0b01) == doctest::Approx(1.0));

  const auto capped = Valuation::budget_capped(Valuation::additive(vec({1.0, 1.0})), 1.5);
  CHECK(capped(0b11) == doctest::Approx(1.5));
  CHECK(capped(0b01) == doctest::Approx(1.0));
}

TEST_CASE("evaluation is monotone on all subsets (m <= 4)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 4;
    std::vector<Vector> clauses;
    for (int c = 0; c < 3; ++c) {
      Vector v(m);
      for (int j = 0; j < m; ++j) v[j] = unif(rng);
      clauses.push_back(v);
    }
    Valuation v = Valuation::xos(clauses);
    if (trial % 2 == 1) v = Valuation::budget_capped(v, 0.2 + unif(rng));
    for (ItemSet s = 0; s < 16; ++s) {
      for (ItemSet t = 0; t < 16; ++t) {
        if ((s & t) == s) CHECK(v(s) <= v(t) + 1e-12);
      }
    }
  }
}

TEST_CASE("infinite cap is the identity") {
  const auto add = Valuation::additive(vec({2.0, 2.0}));
  const auto same = budget_cap(add, kInf);
  for (ItemSet s = 0; s < 4; ++s) CHECK(same(s) == add(s));
  CHECK(budget_cap(add, 3.0)(0b11) == doctest::Approx(3.0));
  CHECK_THROWS(Valuation::budget_capped(add, 0.0));
}

TEST_CASE("single-auction winner and payment rules") {
  auto inst = two_agent({Valuation::additive(vec({1.0})),
                         Valuation::additive(vec({1.0}))},
                        vec({0.0}), vec({1.0, 1.0}), vec({kInf, kInf}));
  Matrix bids(2, 1);
  bids << 0.5, 0.3;
  auto out = run_auctions(inst, bids);
  CHECK(out.winner[0] == 0);
  CHECK(out.payments(0, 0) == doctest::Approx(0.5));
  CHECK(out.payments(1, 0) == 0.0);

  // Reserve unmet: nobody wins, nobody pays.
  inst.reserves[0] = 0.5;
  bids << 0.2, 0.2;
  out = run_auctions(inst, bids);
  CHECK(out.winner[0] == -1);
  CHECK(out.payments.sum() == 0.0);
}

TEST_CASE("tie override applies only at its exact value") {
  TieBreakRule rule;
  rule.default_priority = {{0, 1}, {0, 1}};
  rule.overrides.push_back({1, 0.0, {1, 0}});
  auto inst = two_agent({Valuation::additive(vec({1.0, 1.0})),
                         Valuation::additive(vec({0.0, 1.0}))},
                        vec({0.0, 0.0}), vec({1.0, 1.0}), vec({kInf, kInf}),
                        rule);
  Matrix bids = Matrix::Zero(2, 2);
  auto out = run_auctions(inst, bids);
  CHECK(out.winner[0] == 0);  // default priority
  CHECK(out.winner[1] == 1);  // override at value 0
  CHECK(out.payments(1, 1) == 0.0);

  bids(0, 1) = 0.4;
  bids(1, 1) = 0.4;
  out = run_auctions(inst, bids);
  CHECK(out.winner[1] == 0);  // tie away from 0 follows the default
}

TEST_CASE("threshold tie rule switches priorities") {
  TieBreakRule rule;
  rule.thresholds.push_back({0, 0.5, {1, 0}, {0, 1}});
  auto inst = two_agent({Valuation::additive(vec({1.0})),
                         Valuation::additive(vec({1.0}))},
                        vec({0.0}), vec({1.0, 1.0}), vec({kInf, kInf}), rule);
  Matrix bids(2, 1);
  bids << 0.5, 0.5;
  CHECK(run_auctions(inst, bids).winner[0] == 1);  // at threshold: below list
  bids << 0.6, 0.6;
  CHECK(run_auctions(inst, bids).winner[0] == 0);
}

TEST_CASE("welfare maximizer handles budget caps") {
  auto inst = two_agent({Valuation::additive(vec({1.0, 1.0})),
                         Valuation::additive(vec({0.0, 1.0}))},
                        vec({0.0, 0.0}), vec({1.0, 1.0}), vec({1.0, kInf}));
  const auto opt = optimal_allocation(inst);
  CHECK(opt.value == doctest::Approx(2.0));
  CHECK(opt.assignment[0] == 0);
  CHECK(opt.assignment[1] == 1);

  auto single = Instance::make(2, 1, vec({0.0}),
                               {Valuation::additive(vec({3.0})),
                                Valuation::additive(vec({0.0}))},
                               vec({1.0, 1.0}), vec({1.0, kInf}));
  CHECK(optimal_allocation(single).value == doctest::Approx(1.0));
}

TEST_CASE("welfare maximizer agrees with an independent enumerator") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3, m = 3;
    std::vector<Valuation> vals;
    Vector sigmas(n), budgets(n);
    for (int i = 0; i < n; ++i) {
      Vector v(m);
      for (int j = 0; j < m; ++j) v[j] = unif(rng);
      vals.push_back(Valuation::additive(v));
      sigmas[i] = unif(rng);
      budgets[i] = 0.2 + unif(rng);
    }
    const auto inst =
        Instance::make(n, m, Vector::Zero(m), vals, sigmas, budgets);
    CHECK(optimal_allocation(inst).value ==
          doctest::Approx(brute_opt(inst)).epsilon(1e-12));
  }
}

TEST_CASE("optimal value dominates the welfare of every pure outcome") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto inst = two_agent({Valuation::additive(vec({0.8, 0.4})),
                               Valuation::additive(vec({0.5, 0.9}))},
                              vec({0.0, 0.0}), vec({0.5, 1.0}),
                              vec({0.7, kInf}));
  const double opt = optimal_allocation(inst).value;
  for (int trial = 0; trial < 200; ++trial) {
    Matrix bids(2, 2);
    for (int i = 0; i < 4; ++i) bids(i / 2, i % 2) = unif(rng);
    const auto out = run_auctions(inst, bids);
    double lw = 0.0;
    for (int i = 0; i < 2; ++i) {
      lw += std::min(inst.taus[i] * inst.valuations[i](out.bundle[i]),
                     inst.budgets[i]);
    }
    CHECK(lw <= opt + 1e-12);
  }
}

TEST_CASE("representatives: additive pass through, xos picks the clause") {
  const auto add_inst = two_agent({Valuation::additive(vec({1.0, 0.5})),
                                   Valuation::additive(vec({0.2, 0.8}))},
                                  vec({0.0, 0.0}), vec({0.0, 0.0}),
                                  vec({kInf, kInf}));
  const auto opt = optimal_allocation(add_inst);
  const auto reps = opt_representatives(add_inst, opt);
  CHECK(reps(0, 0) == doctest::Approx(1.0));
  CHECK(reps(0, 1) == doctest::Approx(0.5));

  const auto xos_inst = two_agent(
      {Valuation::xos({vec({1.0, 0.0}), vec({0.0, 1.0})}),
       Valuation::additive(vec({0.0, 0.0}))},
      vec({0.0, 0.0}), vec({0.0, 0.0}), vec({kInf, kInf}));
  const auto xopt = optimal_allocation(xos_inst);
  const auto xreps = opt_representatives(xos_inst, xopt);
  // Bundle identity on the winner's bundle.
  double sum = 0.0;
  for (int j = 0; j < 2; ++j) {
    if (contains(xopt.bundle[0], j)) sum += xreps(0, j);
  }
  CHECK(sum == doctest::Approx(xos_inst.valuations[0](xopt.bundle[0])));
}

TEST_CASE("representatives of capped valuations stay dominated") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 4;
    std::vector<Vector> clauses;
    for (int c = 0; c < 3; ++c) {
      Vector v(m);
      for (int j = 0; j < m; ++j) v[j] = unif(rng);
      clauses.push_back(v);
    }
    const auto capped =
        Valuation::budget_capped(Valuation::xos(clauses), unif(rng));
    const auto inst =
        two_agent({capped, Valuation::additive(Vector::Zero(m))},
                  Vector::Zero(m), vec({0.0, 0.0}), vec({kInf, kInf}));
    const auto opt = optimal_allocation(inst);
    const auto reps = opt_representatives(inst, opt);  // throws on violation
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (contains(opt.bundle[0], j)) sum += reps(0, j);
    }
    CHECK(sum == doctest::Approx(inst.valuations[0](opt.bundle[0])));
    for (ItemSet s = 0; s < 16; ++s) {
      double clause_sum = 0.0;
      for (int j = 0; j < m; ++j) {
        if (contains(s, j)) clause_sum += reps(0, j);
      }
      CHECK(clause_sum <= inst.valuations[0](s) + 1e-9);
    }
  }
}

TEST_CASE("rightful winners prefer the optimal allocation on ties") {
  auto inst = two_agent({Valuation::additive(vec({1.0})),
                         Valuation::additive(vec({1.0}))},
                        vec({0.0}), vec({0.0, 0.0}), vec({kInf, 0.5}));
  // Tie in values; the optimal allocation gives the item to agent 0
  // (agent 1's budget caps their contribution).
  const auto opt = optimal_allocation(inst);
  const auto reps = opt_representatives(inst, opt);
  const auto rw = rightful_winners(inst, opt, reps);
  CHECK(rw[0] == opt.assignment[0]);

  auto strict = two_agent({Valuation::additive(vec({1.0})),
                           Valuation::additive(vec({0.5}))},
                          vec({0.0}), vec({0.0, 0.0}), vec({kInf, kInf}));
  const auto sopt = optimal_allocation(strict);
  CHECK(rightful_winners(strict, sopt, opt_representatives(strict, sopt))[0] ==
        0);
}

TEST_CASE("relative reserve gaps") {
  auto zero = two_agent({Valuation::additive(vec({1.0, 1.0})),
                         Valuation::additive(vec({0.5, 0.5}))},
                        vec({0.0, 0.0}), vec({0.0, 0.0}), vec({kInf, kInf}));
  CHECK(eta_gaps(zero).min_gap == 0.0);

  auto single = two_agent({Valuation::additive(vec({1.0})),
                           Valuation::additive(vec({0.2}))},
                          vec({0.3}), vec({0.0, 0.0}), vec({kInf, kInf}));
  const auto gaps = eta_gaps(single);
  CHECK(gaps.per_item[0] == doctest::Approx(0.3));
  CHECK(gaps.min_gap == doctest::Approx(0.3));

  auto infeasible = two_agent({Valuation::additive(vec({1.0})),
                               Valuation::additive(vec({0.2}))},
                              vec({1.0}), vec({0.0, 0.0}), vec({kInf, kInf}));
  CHECK_THROWS(eta_gaps(infeasible));
}

TEST_CASE("target normalization preserves the optimum") {
  // tau = 1 everywhere: unchanged.
  auto inst = two_agent({Valuation::additive(vec({1.0, 0.5})),
                         Valuation::additive(vec({0.3, 0.8}))},
                        vec({0.0, 0.0}), vec({0.5, 1.0}), vec({kInf, kInf}));
  auto same = normalize_targets(inst);
  CHECK(same.sigmas == inst.sigmas);
  CHECK(same.valuations[0](0b11) == inst.valuations[0](0b11));

  // Folding tau = (0.5, 2) scales values and sigmas.
  auto taus = vec({0.5, 2.0});
  auto scaled = Instance::make(2, 2, vec({0.0, 0.0}),
                               {Valuation::additive(vec({2.0, 1.0})),
                                Valuation::additive(vec({0.3, 0.8}))},
                               vec({1.0, 0.4}), vec({0.9, kInf}), {}, taus);
  const auto norm = normalize_targets(scaled);
  CHECK(norm.taus == Vector::Ones(2));
  CHECK(norm.sigmas[0] == doctest::Approx(0.5));
  CHECK(norm.sigmas[1] == doctest::Approx(0.8));
  CHECK(norm.valuations[0](0b01) == doctest::Approx(1.0));
  CHECK(optimal_allocation(norm).value ==
        doctest::Approx(optimal_allocation(scaled).value).epsilon(1e-12));

  // Random cross-check of the optimum under folding.
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = vec({0.5, 2.0});
    auto rand_inst = Instance::make(
        2, 2, vec({0.0, 0.0}),
        {Valuation::additive(vec({unif(rng), unif(rng)})),
         Valuation::additive(vec({unif(rng), unif(rng)}))},
        vec({unif(rng), 0.4 * unif(rng)}), vec({unif(rng), kInf}), {}, t);
    CHECK(optimal_allocation(normalize_targets(rand_inst)).value ==
          doctest::Approx(optimal_allocation(rand_inst).value).epsilon(1e-12));
  }
}
