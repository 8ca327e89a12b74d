#include "fpa/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpa {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Valuation

Valuation Valuation::additive(Vector values) {
  require(values.size() >= 1, "additive: needs at least one item");
  require((values.array() >= 0).all(), "additive: negative value");
  Valuation v;
  v.kind_ = Kind::kAdditive;
  v.clauses_.push_back(std::move(values));
  return v;
}

Valuation Valuation::xos(std::vector<Vector> clauses) {
  require(!clauses.empty(), "xos: clause list empty");
  const auto m = clauses.front().size();
  for (const auto& c : clauses) {
    require(c.size() == m, "xos: clause length mismatch");
    require((c.array() >= 0).all(), "xos: negative clause entry");
  }
  Valuation v;
  v.kind_ = Kind::kXos;
  v.clauses_ = std::move(clauses);
  return v;
}

Valuation Valuation::budget_capped(Valuation inner, double cap) {
  require(cap > 0, "budget_capped: cap must be positive");
  Valuation v;
  v.kind_ = Kind::kBudgetCapped;
  v.cap_ = cap;
  v.inner_ = std::make_shared<const Valuation>(std::move(inner));
  return v;
}

int Valuation::num_items() const {
  if (kind_ == Kind::kBudgetCapped) return inner_->num_items();
  return static_cast<int>(clauses_.front().size());
}

double Valuation::operator()(ItemSet bundle) const {
  if (kind_ == Kind::kBudgetCapped) {
    return std::min((*inner_)(bundle), cap_);
  }
  double best = 0.0;
  bool first = true;
  for (const auto& c : clauses_) {
    double sum = 0.0;
    for (int j = 0; j < c.size(); ++j) {
      if (contains(bundle, j)) sum += c[j];
    }
    if (first || sum > best) best = sum;
    first = false;
  }
  return best;
}

double Valuation::singleton(int item) const {
  return (*this)(ItemSet{1} << item);
}

double Valuation::max_entry() const {
  if (kind_ == Kind::kBudgetCapped) {
    return std::min(inner_->max_entry(), cap_);
  }
  double best = 0.0;
  for (const auto& c : clauses_) best = std::max(best, c.maxCoeff());
  return best;
}

Valuation Valuation::scaled(double c) const {
  require(c >= 0, "scaled: negative factor");
  if (kind_ == Kind::kBudgetCapped) {
    return budget_capped(inner_->scaled(c), cap_ * c);
  }
  Valuation v = *this;
  for (auto& cl : v.clauses_) cl *= c;
  return v;
}

Valuation budget_cap(const Valuation& v, double cap) {
  if (std::isinf(cap)) return v;
  return Valuation::budget_capped(v, cap);
}

// ---------------------------------------------------------------------------
// Tie breaking

namespace {

int first_by_priority(const std::vector<int>& priority,
                      const std::vector<int>& tied) {
  for (int agent : priority) {
    if (std::find(tied.begin(), tied.end(), agent) != tied.end()) return agent;
  }
  return *std::min_element(tied.begin(), tied.end());
}

}  // namespace

int TieBreakRule::winner_among(int auction, double value,
                               const std::vector<int>& tied,
                               bool exact) const {
  if (tied.size() == 1) return tied.front();
  if (exact) {
    for (const auto& o : overrides) {
      if (o.auction == auction && o.value == value) {
        return first_by_priority(o.priority, tied);
      }
    }
  }
  for (const auto& t : thresholds) {
    if (t.auction == auction) {
      return first_by_priority(value <= t.threshold ? t.below : t.above, tied);
    }
  }
  if (auction < static_cast<int>(default_priority.size()) &&
      !default_priority[auction].empty()) {
    return first_by_priority(default_priority[auction], tied);
  }
  return *std::min_element(tied.begin(), tied.end());
}

// ---------------------------------------------------------------------------
// Instance

void Instance::validate() const {
  require(n >= 2, "instance: need at least two agents");
  require(m >= 1 && m <= 63, "instance: item count out of range");
  require(reserves.size() == m, "instance: reserves size");
  require((reserves.array() >= 0).all(), "instance: negative reserve");
  require(static_cast<int>(valuations.size()) == n, "instance: valuations size");
  for (const auto& v : valuations) {
    require(v.num_items() == m, "instance: valuation item count");
  }
  require(sigmas.size() == n && taus.size() == n && budgets.size() == n,
          "instance: agent vector size");
  for (int i = 0; i < n; ++i) {
    require(sigmas[i] >= 0 && sigmas[i] <= 1, "instance: sigma outside [0,1]");
    require(taus[i] > 0, "instance: tau must be positive");
    require(sigmas[i] * taus[i] <= 1 + 1e-12, "instance: tau*sigma exceeds 1");
    require(budgets[i] > 0, "instance: budget must be positive");
  }
}

Instance Instance::make(int n, int m, Vector reserves,
                        std::vector<Valuation> valuations, Vector sigmas,
                        Vector budgets, TieBreakRule tiebreak,
                        std::optional<Vector> taus) {
  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.reserves = std::move(reserves);
  inst.valuations = std::move(valuations);
  inst.sigmas = std::move(sigmas);
  inst.taus = taus ? std::move(*taus) : Vector::Ones(n);
  inst.budgets = std::move(budgets);
  inst.tiebreak = std::move(tiebreak);
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------------------
// Auction run

Outcome run_auctions(const Instance& inst, const Matrix& bids,
                     bool exact_ties) {
  Outcome out;
  out.winner.assign(inst.m, -1);
  out.payments = Matrix::Zero(inst.n, inst.m);
  out.bundle.assign(inst.n, 0);

  for (int j = 0; j < inst.m; ++j) {
    double best = -1.0;
    for (int i = 0; i < inst.n; ++i) {
      const double b = bids(i, j);
      if (b < 0) throw std::invalid_argument("run_auctions: negative bid");
      if (b + 1e-12 < inst.reserves[j]) continue;
      best = std::max(best, b);
    }
    if (best < 0) continue;  // reserve unmet by everyone

    std::vector<int> tied;
    for (int i = 0; i < inst.n; ++i) {
      const double b = bids(i, j);
      if (b + 1e-12 < inst.reserves[j]) continue;
      if (std::abs(b - best) <= kTieTol) tied.push_back(i);
    }
    const int w = inst.tiebreak.winner_among(j, best, tied, exact_ties);
    out.winner[j] = w;
    out.payments(w, j) = bids(w, j);
    out.bundle[w] = with_item(out.bundle[w], j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimal allocation

OptimalAllocation optimal_allocation(const Instance& inst,
                                     std::int64_t limit) {
  double total = 1.0;
  for (int j = 0; j < inst.m; ++j) {
    total *= inst.n + 1;
    if (total > static_cast<double>(limit)) {
      throw std::runtime_error("optimal_allocation: enumeration limit exceeded");
    }
  }

  OptimalAllocation best;
  best.assignment.assign(inst.m, -1);
  best.bundle.assign(inst.n, 0);
  best.value = -1.0;

  std::vector<int> assign(inst.m, -1);  // -1 = unassigned, else agent
  std::vector<ItemSet> bundle(inst.n, 0);
  while (true) {
    bundle.assign(inst.n, 0);
    for (int j = 0; j < inst.m; ++j) {
      if (assign[j] >= 0) bundle[assign[j]] = with_item(bundle[assign[j]], j);
    }
    double value = 0.0;
    for (int i = 0; i < inst.n; ++i) {
      value += std::min(inst.taus[i] * inst.valuations[i](bundle[i]),
                        inst.budgets[i]);
    }
    if (value > best.value) {  // strict: first maximizer in lex order wins
      best.value = value;
      best.assignment = assign;
      best.bundle = bundle;
    }
    int j = inst.m - 1;
    while (j >= 0) {
      if (++assign[j] < inst.n) break;
      assign[j] = -1;
      --j;
    }
    if (j < 0) break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Representatives

namespace {

// Maximizing additive vector for `v` at `bundle`, dominated by `v` on every
// subset and exact on `bundle`. Budget caps restrict the vector to the bundle
// and rescale it so the capped identities survive.
Vector representative_at(const Valuation& v, ItemSet bundle, int m) {
  switch (v.kind()) {
    case Valuation::Kind::kAdditive:
      return v.clauses().front();
    case Valuation::Kind::kXos: {
      const Vector* best = nullptr;
      double best_sum = -1.0;
      for (const auto& c : v.clauses()) {
        double sum = 0.0;
        for (int j = 0; j < m; ++j) {
          if (contains(bundle, j)) sum += c[j];
        }
        if (sum > best_sum + 1e-15) {
          best_sum = sum;
          best = &c;
        }
      }
      return *best;
    }
    case Valuation::Kind::kBudgetCapped: {
      Vector rep = representative_at(v.inner(), bundle, m);
      const double inner_value = v.inner()(bundle);
      Vector out = Vector::Zero(m);
      const double scale =
          inner_value > v.cap() && inner_value > 0 ? v.cap() / inner_value : 1.0;
      for (int j = 0; j < m; ++j) {
        if (contains(bundle, j)) out[j] = scale * rep[j];
      }
      return out;
    }
  }
  throw std::logic_error("representative_at: unhandled kind");
}

bool has_budget_cap(const Valuation& v) {
  return v.kind() == Valuation::Kind::kBudgetCapped;
}

}  // namespace

Matrix opt_representatives(const Instance& inst, const OptimalAllocation& opt) {
  Matrix reps(inst.n, inst.m);
  bool needs_check = false;
  for (int i = 0; i < inst.n; ++i) {
    reps.row(i) =
        representative_at(inst.valuations[i], opt.bundle[i], inst.m).transpose();
    needs_check = needs_check || has_budget_cap(inst.valuations[i]);
  }

  // The capped construction is exact only witnessed by enumeration; refuse
  // instead of approximating when the subset space is too large.
  if (needs_check) {
    if (inst.m > 20) {
      throw std::runtime_error(
          "opt_representatives: capped valuations need enumeration, m too large");
    }
    for (int i = 0; i < inst.n; ++i) {
      const auto& v = inst.valuations[i];
      const double at_bundle = v(opt.bundle[i]);
      double rep_sum = 0.0;
      for (int j = 0; j < inst.m; ++j) {
        if (contains(opt.bundle[i], j)) rep_sum += reps(i, j);
      }
      if (std::abs(rep_sum - at_bundle) > 1e-9 * std::max(1.0, at_bundle)) {
        throw std::runtime_error("opt_representatives: bundle identity failed");
      }
      for (ItemSet s = 0; s < (ItemSet{1} << inst.m); ++s) {
        double sum = 0.0;
        for (int j = 0; j < inst.m; ++j) {
          if (contains(s, j)) sum += reps(i, j);
        }
        if (sum > v(s) + 1e-9 * std::max(1.0, sum)) {
          throw std::runtime_error("opt_representatives: domination failed");
        }
      }
    }
  }
  return reps;
}

std::vector<int> rightful_winners(const Instance& inst,
                                  const OptimalAllocation& opt,
                                  const Matrix& reps) {
  std::vector<int> rw(inst.m, 0);
  for (int j = 0; j < inst.m; ++j) {
    const double top = reps.col(j).maxCoeff();
    int pick = -1;
    // Prefer the optimal winner among the maximizers, then smallest index.
    if (opt.assignment[j] >= 0 &&
        reps(opt.assignment[j], j) >= top - 1e-12) {
      pick = opt.assignment[j];
    } else {
      for (int i = 0; i < inst.n; ++i) {
        if (reps(i, j) >= top - 1e-12) {
          pick = i;
          break;
        }
      }
    }
    rw[j] = pick;
  }
  return rw;
}

EtaGaps eta_gaps(const Instance& inst) {
  const auto opt = optimal_allocation(inst);
  const Matrix reps = opt_representatives(inst, opt);
  const auto rw = rightful_winners(inst, opt, reps);

  EtaGaps out;
  out.per_item = Vector::Zero(inst.m);
  for (int j = 0; j < inst.m; ++j) {
    if (inst.reserves[j] <= 0) continue;
    const double v = reps(rw[j], j);
    if (inst.reserves[j] >= v * (1.0 - 1e-15)) {
      throw std::runtime_error(
          "eta_gaps: reserve at or above the rightful winner's value");
    }
    out.per_item[j] = inst.reserves[j] / v;
  }
  out.min_gap = inst.m > 0 ? out.per_item.minCoeff() : 0.0;
  return out;
}

Instance normalize_targets(const Instance& inst) {
  Instance out = inst;
  for (int i = 0; i < inst.n; ++i) {
    out.valuations[i] = inst.valuations[i].scaled(inst.taus[i]);
    out.sigmas[i] = inst.sigmas[i] * inst.taus[i];
    out.taus[i] = 1.0;
  }
  out.validate();
  return out;
}

}  // namespace fpa
