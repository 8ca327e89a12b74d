#include "fpa/constructions.hpp"

#include <cmath>
#include <stdexcept>

#include "fpa/special_math.hpp"
#include "fpa/smoothness.hpp"

namespace fpa {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double e() { return std::exp(1.0); }

double get_param(const std::map<std::string, double>& params,
                 const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix mat2x2(double a00, double a01, double a10, double a11) {
  Matrix m(2, 2);
  m << a00, a01, a10, a11;
  return m;
}

TieBreakRule favor_first(int m) {
  TieBreakRule rule;
  rule.default_priority.assign(m, {0, 1});
  return rule;
}

double default_a(double t) { return -lambert_w0(-std::exp(-t - 1.0)); }

/// x is drawn once; both rows bid it in `auction` and the constants
/// elsewhere.
CoupledProfile coupled_both(const ParametricBid& x, int n, int m, int auction,
                            const Matrix& constants) {
  CoupledProfile cp;
  cp.x = x;
  cp.map.constants = constants;
  cp.map.draws.setConstant(n, m, false);
  for (int i = 0; i < n; ++i) cp.map.draws(i, auction) = true;
  return cp;
}

Construction make_universal_budget(const std::map<std::string, double>& params) {
  const double t1 = get_param(params, "t1", 1.0);
  const double t2 = get_param(params, "t2", 1.0);
  require(t1 >= 0 && t1 <= 1 && t2 >= 0 && t2 <= 1,
          "universal_budget: types outside [0,1]");

  Construction c;
  c.name = "universal_budget";
  c.params = {{"t1", t1}, {"t2", t2}};
  c.instance = Instance::make(
      2, 2, vec({0.0, 0.0}),
      {Valuation::additive(vec({1.0, 1.0})), Valuation::additive(vec({0.0, 1.0}))},
      vec({t1, t2}), vec({1.0, kInf}), favor_first(2));
  c.profile = deterministic_profile(mat2x2(0, 1, 0, 1));
  c.claimed_ratio = 2.0;
  c.equilibrium_class = "MNE";
  c.well_supported_claim = true;
  return c;
}

Construction make_budget_commontype(const std::map<std::string, double>& params) {
  const double t = get_param(params, "t", 1.0);
  require(t > theta_threshold() && t <= 1,
          "budget_commontype: type must lie above the threshold");
  const double a = get_param(params, "a", default_a(t));
  require(a > 1.0 - t && a <= 1.0 / e() + 1e-12,
          "budget_commontype: a outside (1-t, 1/e]");

  const double budget1 = (1.0 - a + a * std::log(a)) / t;

  TieBreakRule rule = favor_first(2);
  rule.overrides.push_back({1, 0.0, {1, 0}});

  Construction c;
  c.name = "budget_commontype";
  c.params = {{"t", t}, {"a", a}};
  c.instance = Instance::make(
      2, 2, vec({0.0, 0.0}),
      {Valuation::additive(vec({1.0, 1.0})), Valuation::additive(vec({0.0, 1.0}))},
      vec({t, t}), vec({budget1, kInf}), rule);
  const auto x = make_parametric("reciprocal", {{"k", a}, {"t", t}}, 0.0,
                                 (1.0 - a) / t);
  c.profile = coupled_both(x, 2, 2, 1, Matrix::Zero(2, 2));
  c.claimed_ratio = commontype_ratio(t, a);
  c.equilibrium_class = "CCE";
  c.well_supported_claim = true;
  return c;
}

Construction make_budgetfree_hybrid(const std::map<std::string, double>& params) {
  const double t = get_param(params, "t", 1.0);
  require(t > 0 && t <= 1, "budgetfree_hybrid: type outside (0,1]");

  Construction c;
  c.name = "budgetfree_hybrid";
  c.equilibrium_class = "MNE";
  c.well_supported_claim = true;

  if (t <= theta_threshold()) {
    // Flat regime: a deterministic profile already reaches ratio 2.
    c.params = {{"t", t}};
    c.instance = Instance::make(
        2, 2, vec({0.0, 0.0}),
        {Valuation::additive(vec({1.0, 0.0})),
         Valuation::additive(vec({0.0, 1.0}))},
        vec({0.0, t}), vec({kInf, kInf}), favor_first(2));
    c.profile = deterministic_profile(mat2x2(0, 1, 0, 1));
    c.claimed_ratio = 2.0;
    return c;
  }

  const double a = get_param(params, "a", default_a(t));
  require(a > 1.0 - t && a < 1.0, "budgetfree_hybrid: a outside (1-t, 1)");
  const double v1 = (1.0 - a + a * std::log(a)) / t;

  TieBreakRule rule = favor_first(2);
  rule.overrides.push_back({1, 0.0, {1, 0}});

  c.params = {{"t", t}, {"a", a}};
  c.instance = Instance::make(
      2, 2, vec({0.0, 0.0}),
      {Valuation::additive(vec({v1, 0.0})), Valuation::additive(vec({0.0, 1.0}))},
      vec({0.0, t}), vec({kInf, kInf}), rule);

  ProductProfile prod;
  ProductComponent agent0;
  ProductComponent::ParametricRow row0;
  row0.x = make_parametric("reciprocal", {{"k", a}, {"t", t}}, 0.0,
                           (1.0 - a) / t);
  row0.constants = vec({0.0, 0.0});
  row0.draws = {false, true};
  agent0.row = row0;
  ProductComponent agent1;
  ProductComponent::FiniteRow row1;
  row1.atoms.push_back({1.0, vec({0.0, 0.0})});
  agent1.row = row1;
  prod.components = {agent0, agent1};
  c.profile = prod;
  c.claimed_ratio = commontype_ratio(t, a);
  return c;
}

Construction make_reserve_hightype(const std::map<std::string, double>& params) {
  const double t = get_param(params, "t", 1.0);
  const double eta = get_param(params, "eta", 0.3);
  require(t >= 1.0 - 1.0 / e() - 1e-12 && t <= 1,
          "reserve_hightype: type outside [1-1/e, 1]");
  require(eta >= 0 && eta < 1, "reserve_hightype: eta outside [0,1)");
  // The support must stay below the high value so the draw never overbids.
  require(eta <= (1.0 - e() * (1.0 - t)) / t + 1e-12,
          "reserve_hightype: eta too large for this type");

  TieBreakRule rule = favor_first(1);
  if (eta > 0) {
    rule.overrides.push_back({0, eta, {1, 0}});
  } else {
    rule.overrides.push_back({0, 0.0, {1, 0}});
  }

  Construction c;
  c.name = "reserve_hightype";
  c.params = {{"t", t}, {"eta", eta}};
  c.instance = Instance::make(
      2, 1, vec({eta}),
      {Valuation::additive(vec({1.0})), Valuation::additive(vec({eta}))},
      vec({t, t}), vec({kInf, kInf}), rule);
  const double k = (1.0 - t * eta) / e();
  const double hi = (e() - 1.0 + t * eta) / (e() * t);
  const auto x = make_parametric("reciprocal", {{"k", k}, {"t", t}}, eta, hi);
  Matrix consts = Matrix::Zero(2, 1);
  c.profile = coupled_both(x, 2, 1, 0, consts);
  c.claimed_ratio = e() / (e() - 1.0 + eta);
  c.equilibrium_class = "CCE";
  c.well_supported_claim = true;
  return c;
}

Construction make_reserve_valuemax(const std::map<std::string, double>& params) {
  const double eta = get_param(params, "eta", 0.3);
  const double eps = get_param(params, "eps", 1e-3);
  require(eta >= 0 && eta <= 1.0 - eps, "reserve_valuemax: eta outside [0,1-eps]");
  require(eps > 0 && eps < 1, "reserve_valuemax: eps outside (0,1)");

  Construction c;
  c.name = "reserve_valuemax";
  c.params = {{"eta", eta}, {"eps", eps}};
  c.instance = Instance::make(
      2, 2, vec({eta, (1.0 - eps) * (1.0 - eta)}),
      {Valuation::additive(vec({1.0, 0.0})),
       Valuation::additive(vec({0.0, 1.0 - eta}))},
      vec({0.0, 0.0}), vec({kInf, kInf}), favor_first(2));
  c.profile = deterministic_profile(mat2x2(eta, 1.0 - eta, 0.0, 1.0 - eta));
  c.claimed_ratio = 2.0 - eta;
  c.equilibrium_class = "MNE";
  c.well_supported_claim = true;
  return c;
}

Construction make_cce_not_well_supported(
    const std::map<std::string, double>& params) {
  const double r = get_param(params, "r", 0.2);
  require(r >= 0 && r < 1, "cce_not_well_supported: reserve outside [0,1)");

  Construction c;
  c.name = "cce_not_well_supported";
  c.params = {{"r", r}};
  c.instance = Instance::make(
      2, 1, vec({r}),
      {Valuation::additive(vec({1.0})), Valuation::additive(vec({0.0}))},
      vec({1.0, 1.0}), vec({kInf, kInf}), favor_first(1));
  const auto x = make_parametric("reciprocal", {{"k", (1.0 - r) / e()}, {"t", 1.0}},
                                 0.0, (e() - 1.0 + r) / e());
  c.profile = coupled_both(x, 2, 1, 0, Matrix::Zero(2, 1));
  c.claimed_ratio = e() / (e() - 1.0);
  c.equilibrium_class = "CCE";
  c.well_supported_claim = r == 0.0;
  return c;
}

Construction make_submod_mne(const std::map<std::string, double>& params) {
  const double eps = get_param(params, "eps", 0.01);
  const double t2 = get_param(params, "t2", 1.0);
  require(eps > 0 && eps < 1, "submod_mne: eps outside (0,1)");
  require(t2 >= 0 && t2 <= 1, "submod_mne: type outside [0,1]");

  Construction c;
  c.name = "submod_mne";
  c.params = {{"eps", eps}, {"t2", t2}};
  // Agent 0: v({0}) = eps, v({1}) = 1, v({0,1}) = 1 + eps/2 (submodular).
  const Valuation v0 = Valuation::xos(
      {vec({eps, 1.0 - eps / 2.0}), vec({0.0, 1.0})});
  // Agent 1: flat eps/4 for any non-empty bundle.
  const Valuation v1 =
      Valuation::xos({vec({eps / 4.0, 0.0}), vec({0.0, eps / 4.0})});
  c.instance = Instance::make(2, 2, vec({eps / 2.0, 1.0 - eps / 2.0}), {v0, v1},
                              vec({1.0, t2}), vec({kInf, kInf}), favor_first(2));
  c.profile = deterministic_profile(mat2x2(eps / 2.0, 0.0, 0.0, 0.0));
  c.claimed_ratio = (1.0 + eps / 2.0) / eps;
  c.equilibrium_class = "MNE";
  c.well_supported_claim = false;
  return c;
}

}  // namespace

double commontype_ratio(double t, double a) {
  const double base = 1.0 - a + a * std::log(a);
  return (base + t) / (base + a * t);
}

std::vector<std::string> registered_constructions() {
  return {"universal_budget",   "budget_commontype",
          "budgetfree_hybrid",  "reserve_hightype",
          "reserve_valuemax",   "cce_not_well_supported",
          "submod_mne"};
}

Construction build_construction(const std::string& name,
                                const std::map<std::string, double>& params) {
  if (name == "universal_budget") return make_universal_budget(params);
  if (name == "budget_commontype") return make_budget_commontype(params);
  if (name == "budgetfree_hybrid") return make_budgetfree_hybrid(params);
  if (name == "reserve_hightype") return make_reserve_hightype(params);
  if (name == "reserve_valuemax") return make_reserve_valuemax(params);
  if (name == "cce_not_well_supported") {
    return make_cce_not_well_supported(params);
  }
  if (name == "submod_mne") return make_submod_mne(params);
  throw std::invalid_argument("unknown construction: " + name);
}

ConstructionReport verify_construction(
    const std::string& name, const std::map<std::string, double>& params,
    double tol, double ratio_tol) {
  ConstructionReport report;
  report.construction = build_construction(name, params);
  const auto& c = report.construction;

  VerifyOptions options;
  options.tol = tol;
  report.equilibrium = c.equilibrium_class == "MNE"
                           ? verify_mne(c.instance, c.profile, options)
                           : verify_cce(c.instance, c.profile, options);

  report.achieved_ratio = report.equilibrium.ratio;
  report.claimed_ratio = c.claimed_ratio;
  report.ratio_matches =
      std::abs(report.achieved_ratio - report.claimed_ratio) <= ratio_tol;
  report.well_supported_matches =
      report.equilibrium.well_supported == c.well_supported_claim;
  report.passed = report.equilibrium.verdict == Verdict::kVerified &&
                  report.equilibrium.profile_feasible && report.ratio_matches &&
                  report.well_supported_matches;
  return report;
}

ClaimDomainReport claim_domain_check(double t) {
  if (t <= theta_threshold() || t > 1) {
    throw std::invalid_argument(
        "claim_domain_check: type must lie in (threshold, 1]");
  }
  ClaimDomainReport report;
  report.a_star = default_a(t);
  report.lower_margin = report.a_star - (1.0 - t);
  report.in_range =
      report.lower_margin > 0 && report.a_star <= 1.0 / e() + 1e-12;
  const double closed_form =
      1.0 + t / (1.0 + lambert_w0(-std::exp(-t - 1.0)));
  report.identity_residual =
      std::abs(commontype_ratio(t, report.a_star) - closed_form);
  return report;
}

}  // namespace fpa
