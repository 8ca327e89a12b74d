#include "fpa/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "fpa/scenario_eval.hpp"

namespace fpa {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double param(const std::map<std::string, double>& params, const std::string& k) {
  auto it = params.find(k);
  if (it == params.end()) {
    throw std::invalid_argument("parametric family: missing parameter " + k);
  }
  return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadrature

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double fm, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, fa, m, fm, flm, left, tol * 0.5, depth - 1) +
         simpson(f, m, fm, b, fb, frm, right, tol * 0.5, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, fa, b, fb, fm, whole, tol, 40);
}

// ---------------------------------------------------------------------------
// ParametricBid

double ParametricBid::prob_below(double x) const {
  if (x <= lo) return 0.0;
  if (x > hi) return 1.0;
  return cdf(x);  // continuous above lo, so P[X < x] = cdf(x) there
}

double ParametricBid::prob_at_most(double x) const {
  if (x < lo) return 0.0;
  if (x >= hi) return 1.0;
  if (x == lo) return atom_at_lo;
  return cdf(x);
}

double ParametricBid::quantile(double u) const {
  if (u <= atom_at_lo) return lo;
  double a = lo, b = hi;
  for (int i = 0; i < 200 && b - a > 1e-10 * std::max(1.0, std::abs(hi)); ++i) {
    const double m = 0.5 * (a + b);
    (cdf(m) < u ? a : b) = m;
  }
  return 0.5 * (a + b);
}

void ParametricBid::validate() const {
  require(hi > lo, "parametric: empty support");
  require(atom_at_lo >= -1e-12 && atom_at_lo < 1.0, "parametric: bad atom mass");
  if (std::abs(cdf(hi) - 1.0) > 1e-9) {
    throw std::invalid_argument("parametric: cdf(hi) != 1");
  }
  const int kGrid = 257;
  double prev = -1e-300;
  for (int i = 0; i <= kGrid; ++i) {
    const double x = lo + (hi - lo) * i / kGrid;
    const double c = cdf(x);
    if (c < prev - 1e-12) throw std::invalid_argument("parametric: cdf decreasing");
    prev = c;
    if (x > lo && pdf(x) < -1e-12) {
      throw std::invalid_argument("parametric: negative density");
    }
  }
  const double mass = atom_at_lo + integrate(pdf, lo, hi, 1e-10);
  if (std::abs(mass - 1.0) > 1e-7) {
    throw std::invalid_argument("parametric: total mass != 1");
  }
}

ParametricBid make_parametric(const std::string& family,
                              const std::map<std::string, double>& params,
                              double lo, double hi) {
  ParametricBid out;
  out.family = family;
  out.params = params;
  out.lo = lo;
  out.hi = hi;

  if (family == "affine") {
    const double alpha = param(params, "alpha");
    const double beta = param(params, "beta");
    out.cdf = [alpha, beta](double x) { return alpha * x + beta; };
    out.pdf = [alpha](double) { return alpha; };
    out.atom_at_lo = std::max(0.0, alpha * lo + beta);
  } else if (family == "reciprocal") {
    const double k = param(params, "k");
    const double t = param(params, "t");
    require(t > 0 && t * hi < 1.0, "reciprocal: need 0 < t and t*hi < 1");
    out.cdf = [k, t](double x) { return k / (1.0 - t * x); };
    out.pdf = [k, t](double x) {
      const double d = 1.0 - t * x;
      return k * t / (d * d);
    };
    out.atom_at_lo = k / (1.0 - t * lo);
  } else if (family == "log_reciprocal") {
    const double mu = param(params, "mu");
    const double t = param(params, "t");
    const double v = param(params, "v");
    require(mu > 0 && t > 0 && v - t * hi > 0,
            "log_reciprocal: need mu,t > 0 and v - t*hi > 0");
    const double top = v - t * lo;
    out.cdf = [mu, t, v, top](double x) {
      return mu / t * std::log(top / (v - t * x));
    };
    out.pdf = [mu, t, v](double x) { return mu / (v - t * x); };
    out.atom_at_lo = 0.0;
  } else if (family == "uniform") {
    out.cdf = [lo, hi](double x) { return (x - lo) / (hi - lo); };
    out.pdf = [lo, hi](double) { return 1.0 / (hi - lo); };
    out.atom_at_lo = 0.0;
  } else {
    throw std::invalid_argument("unknown parametric family: " + family);
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Profiles

void FiniteProfile::validate() const {
  require(!atoms.empty(), "finite profile: no atoms");
  double total = 0.0;
  for (const auto& a : atoms) {
    require(a.prob > 0, "finite profile: non-positive probability");
    total += a.prob;
  }
  require(std::abs(total - 1.0) <= 1e-12, "finite profile: mass != 1");
}

BidMap BidMap::all_constant(const Matrix& bids) {
  BidMap map;
  map.constants = bids;
  map.draws.setConstant(bids.rows(), bids.cols(), false);
  return map;
}

Matrix BidMap::realize(double x) const {
  Matrix out = constants;
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) {
      if (draws(i, j)) out(i, j) = x;
    }
  }
  return out;
}

RandomBidProfile deterministic_profile(const Matrix& bids) {
  FiniteProfile p;
  p.atoms.push_back({1.0, bids});
  return p;
}

std::vector<Scenario> to_scenarios(const RandomBidProfile& profile, int n, int m) {
  std::vector<Scenario> out;
  if (const auto* fin = std::get_if<FiniteProfile>(&profile)) {
    fin->validate();
    for (const auto& a : fin->atoms) {
      require(a.bids.rows() == n && a.bids.cols() == m,
              "finite profile: atom shape mismatch");
      Scenario sc;
      sc.prob = a.prob;
      sc.map = BidMap::all_constant(a.bids);
      out.push_back(std::move(sc));
    }
    return out;
  }
  if (const auto* cp = std::get_if<CoupledProfile>(&profile)) {
    require(cp->map.constants.rows() == n && cp->map.constants.cols() == m,
            "coupled profile: shape mismatch");
    Scenario sc;
    sc.prob = 1.0;
    sc.map = cp->map;
    if (cp->map.any_draw()) sc.x = cp->x;
    out.push_back(std::move(sc));
    return out;
  }

  const auto& prod = std::get<ProductProfile>(profile);
  require(static_cast<int>(prod.components.size()) == n,
          "product profile: component count");
  int parametric_count = 0;
  for (const auto& c : prod.components) {
    if (std::holds_alternative<ProductComponent::ParametricRow>(c.row)) {
      ++parametric_count;
    }
  }
  if (parametric_count > 1) {
    throw std::runtime_error(
        "product profile: more than one parametric component is not integrable "
        "in closed form");
  }

  // Cross product of the finite components, parametric row shared.
  out.push_back(Scenario{});
  out.back().prob = 1.0;
  out.back().map.constants = Matrix::Zero(n, m);
  out.back().map.draws.setConstant(n, m, false);
  for (int i = 0; i < n; ++i) {
    const auto& comp = prod.components[i];
    if (const auto* fr = std::get_if<ProductComponent::FiniteRow>(&comp.row)) {
      require(!fr->atoms.empty(), "product profile: empty finite row");
      std::vector<Scenario> next;
      for (const auto& sc : out) {
        for (const auto& [p, row] : fr->atoms) {
          require(row.size() == m, "product profile: row length");
          Scenario s = sc;
          s.prob *= p;
          s.map.constants.row(i) = row.transpose();
          next.push_back(std::move(s));
        }
      }
      out = std::move(next);
    } else {
      const auto& pr = std::get<ProductComponent::ParametricRow>(comp.row);
      require(pr.constants.size() == m &&
                  static_cast<int>(pr.draws.size()) == m,
              "product profile: parametric row length");
      for (auto& sc : out) {
        sc.x = pr.x;
        for (int j = 0; j < m; ++j) {
          if (pr.draws[j]) {
            sc.map.draws(i, j) = true;
          } else {
            sc.map.constants(i, j) = pr.constants[j];
          }
        }
      }
    }
  }
  for (auto& sc : out) {
    if (!sc.map.any_draw()) sc.x.reset();
  }
  return out;
}

RandomBidProfile marginal_excluding(const RandomBidProfile& profile, int agent,
                                    int n, int m) {
  auto drop_row = [&](const Matrix& bids) {
    Matrix out(n - 1, m);
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (i == agent) continue;
      out.row(r++) = bids.row(i);
    }
    return out;
  };

  if (const auto* fin = std::get_if<FiniteProfile>(&profile)) {
    FiniteProfile out;
    for (const auto& a : fin->atoms) out.atoms.push_back({a.prob, drop_row(a.bids)});
    return out;
  }
  if (const auto* cp = std::get_if<CoupledProfile>(&profile)) {
    CoupledProfile out;
    out.x = cp->x;
    out.map.constants = drop_row(cp->map.constants);
    out.map.draws.setConstant(n - 1, m, false);
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (i == agent) continue;
      out.map.draws.row(r++) = cp->map.draws.row(i);
    }
    if (!out.map.any_draw()) {
      return deterministic_profile(out.map.constants);
    }
    return out;
  }
  const auto& prod = std::get<ProductProfile>(profile);
  ProductProfile out;
  for (int i = 0; i < n; ++i) {
    if (i != agent) out.components.push_back(prod.components[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Piecewise evaluation

namespace detail {

namespace {

// Bid levels in [lo, hi] at which the outcome of some auction can change as
// the shared draw sweeps its support.
std::vector<double> breakpoints(const Instance& inst, const Scenario& sc) {
  const auto& x = *sc.x;
  std::set<double> pts{x.lo, x.hi};
  auto add = [&](double v) {
    if (v > x.lo && v < x.hi) pts.insert(v);
  };
  for (int j = 0; j < inst.m; ++j) {
    bool any_draw = false;
    for (int i = 0; i < inst.n; ++i) any_draw = any_draw || sc.map.draws(i, j);
    if (!any_draw) continue;
    add(inst.reserves[j]);
    for (int i = 0; i < inst.n; ++i) {
      if (!sc.map.draws(i, j)) add(sc.map.constants(i, j));
    }
    for (const auto& o : inst.tiebreak.overrides) {
      if (o.auction == j) add(o.value);
    }
    for (const auto& t : inst.tiebreak.thresholds) {
      if (t.auction == j) add(t.threshold);
    }
  }
  std::vector<double> sorted(pts.begin(), pts.end());
  std::vector<double> merged;
  for (double v : sorted) {
    if (merged.empty() || v - merged.back() > 1e-8) merged.push_back(v);
  }
  if (merged.size() >= 2) merged.back() = x.hi;
  return merged;
}

EvaluatedPiece make_piece(const Instance& inst, const Scenario& sc, double prob,
                          double x_rep, double x_moment) {
  // Exact-value tie overrides stay active: override values are breakpoints,
  // so an interval midpoint can only coincide with one when the tie is
  // between constant bids, where the override is meant to apply.
  EvaluatedPiece piece;
  piece.prob = prob;
  piece.outcome = run_auctions(inst, sc.map.realize(x_rep));
  piece.payments = Vector::Zero(inst.n);
  piece.item_price = Vector::Zero(inst.m);
  for (int j = 0; j < inst.m; ++j) {
    const int w = piece.outcome.winner[j];
    if (w < 0) continue;
    const double contribution =
        sc.map.draws(w, j) ? x_moment : prob * sc.map.constants(w, j);
    piece.payments[w] += contribution;
    piece.item_price[j] = contribution;
  }
  return piece;
}

}  // namespace

std::vector<EvaluatedPiece> evaluate_scenario(const Instance& inst,
                                              const Scenario& sc) {
  std::vector<EvaluatedPiece> pieces;
  if (sc.pure()) {
    pieces.push_back(make_piece(inst, sc, sc.prob, 0.0, 0.0));
    return pieces;
  }

  const auto& x = *sc.x;
  const auto cuts = breakpoints(inst, sc);

  if (x.atom_at_lo > 0.0) {
    const double mass = sc.prob * x.atom_at_lo;
    pieces.push_back(make_piece(inst, sc, mass, x.lo, mass * x.lo));
  }
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    const double mass =
        sc.prob * (x.cdf(b) - (a == x.lo ? x.atom_at_lo : x.cdf(a)));
    if (mass <= 1e-15) continue;
    const double moment =
        sc.prob * integrate([&](double t) { return t * x.pdf(t); }, a, b);
    pieces.push_back(make_piece(inst, sc, mass, 0.5 * (a + b), moment));
  }
  return pieces;
}

double win_probability(const Instance& inst, const Scenario& sc, int agent,
                       int auction, double bid) {
  const int j = auction;
  if (bid + 1e-12 < inst.reserves[j]) return 0.0;

  // Reserve-meeting constant opponents; the shared draw competes whenever
  // any other agent draws in this auction.
  double top_const = -kInf;
  std::vector<int> const_at_top;
  bool opp_draws = false;
  for (int i = 0; i < inst.n; ++i) {
    if (i == agent) continue;
    if (sc.map.draws(i, j)) {
      opp_draws = true;
      continue;
    }
    const double c = sc.map.constants(i, j);
    if (c + 1e-12 < inst.reserves[j]) continue;
    if (c > top_const + kTieTol) {
      top_const = c;
      const_at_top.assign(1, i);
    } else if (std::abs(c - top_const) <= kTieTol) {
      const_at_top.push_back(i);
    }
  }
  if (top_const > bid + kTieTol) return 0.0;
  const bool tied_with_consts =
      top_const != -kInf && std::abs(bid - top_const) <= kTieTol;

  auto wins_tie = [&](bool with_draws) -> bool {
    std::vector<int> tied{agent};
    if (tied_with_consts) {
      tied.insert(tied.end(), const_at_top.begin(), const_at_top.end());
    }
    if (with_draws) {
      for (int i = 0; i < inst.n; ++i) {
        if (i != agent && sc.map.draws(i, j)) tied.push_back(i);
      }
    }
    if (tied.size() == 1) return true;
    return inst.tiebreak.winner_among(j, bid, tied) == agent;
  };

  if (!opp_draws) {
    if (!tied_with_consts) return 1.0;  // alone or strictly above
    return wins_tie(false) ? 1.0 : 0.0;
  }

  const auto& x = *sc.x;
  // Drawn bids strictly below the agent's bid lose (a draw below the reserve
  // never competes, and the agent's bid is at least the reserve).
  double prob = x.prob_below(bid) * (wins_tie(false) ? 1.0 : 0.0);
  // The draw ties the agent with positive probability only at the atom.
  if (bid == x.lo && x.atom_at_lo > 0.0 && wins_tie(true)) {
    prob += x.atom_at_lo;
  }
  return prob;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Statistics

OutcomeStats expected_outcome_stats(const Instance& inst,
                                    const RandomBidProfile& profile) {
  OutcomeStats stats;
  stats.expected_value = Vector::Zero(inst.n);
  stats.expected_payment = Vector::Zero(inst.n);
  stats.expected_item_price = Vector::Zero(inst.m);

  for (const auto& sc : to_scenarios(profile, inst.n, inst.m)) {
    for (const auto& piece : detail::evaluate_scenario(inst, sc)) {
      for (int i = 0; i < inst.n; ++i) {
        stats.expected_value[i] +=
            piece.prob * inst.valuations[i](piece.outcome.bundle[i]);
      }
      stats.expected_payment += piece.payments;
      stats.expected_item_price += piece.item_price;
    }
  }
  return stats;
}

double liquid_welfare(const Instance& inst, const RandomBidProfile& profile) {
  const auto stats = expected_outcome_stats(inst, profile);
  double lw = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    lw += std::min(inst.taus[i] * stats.expected_value[i], inst.budgets[i]);
  }
  return lw;
}

Instance proxy_instance(const Instance& inst, const RandomBidProfile& profile) {
  const auto stats = expected_outcome_stats(inst, profile);
  Instance out = inst;
  for (int i = 0; i < inst.n; ++i) {
    out.valuations[i] = budget_cap(inst.valuations[i], inst.budgets[i]);
    if (inst.budgets[i] < stats.expected_value[i]) out.sigmas[i] = 0.0;
    out.budgets[i] = kInf;
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

Matrix sample(const RandomBidProfile& profile, int n, int m,
              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  if (const auto* fin = std::get_if<FiniteProfile>(&profile)) {
    const double u = unif(rng);
    double acc = 0.0;
    for (const auto& a : fin->atoms) {
      acc += a.prob;
      if (u < acc) return a.bids;
    }
    return fin->atoms.back().bids;
  }
  if (const auto* cp = std::get_if<CoupledProfile>(&profile)) {
    return cp->map.realize(cp->x.quantile(unif(rng)));
  }
  const auto& prod = std::get<ProductProfile>(profile);
  Matrix bids = Matrix::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    const double u = unif(rng);
    const auto& comp = prod.components[i];
    if (const auto* fr = std::get_if<ProductComponent::FiniteRow>(&comp.row)) {
      double acc = 0.0;
      Vector row = fr->atoms.back().second;
      for (const auto& [p, r] : fr->atoms) {
        acc += p;
        if (u < acc) {
          row = r;
          break;
        }
      }
      bids.row(i) = row.transpose();
    } else {
      const auto& pr = std::get<ProductComponent::ParametricRow>(comp.row);
      const double x = pr.x.quantile(u);
      for (int j = 0; j < m; ++j) {
        bids(i, j) = pr.draws[j] ? x : pr.constants[j];
      }
    }
  }
  return bids;
}

}  // namespace fpa
