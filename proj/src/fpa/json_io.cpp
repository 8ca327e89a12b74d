#include "fpa/json_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fpa {

namespace {

Json number_or_inf(double x) {
  if (std::isinf(x)) return "inf";
  return x;
}

double from_number_or_inf(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw std::invalid_argument("expected a number or \"inf\"");
  }
  return j.get<double>();
}

Json vector_to_json(const Vector& v) {
  Json j = Json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json j = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    j.push_back(vector_to_json(m.row(i).transpose()));
  }
  return j;
}

Matrix matrix_from_json(const Json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Json valuation_to_json(const Valuation& v) {
  Json j;
  switch (v.kind()) {
    case Valuation::Kind::kAdditive:
      j["kind"] = "additive";
      j["values"] = vector_to_json(v.clauses().front());
      break;
    case Valuation::Kind::kXos: {
      j["kind"] = "xos";
      Json clauses = Json::array();
      for (const auto& c : v.clauses()) clauses.push_back(vector_to_json(c));
      j["clauses"] = clauses;
      break;
    }
    case Valuation::Kind::kBudgetCapped:
      j["kind"] = "budget_capped";
      j["inner"] = valuation_to_json(v.inner());
      j["cap"] = number_or_inf(v.cap());
      break;
  }
  return j;
}

Valuation valuation_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "additive") {
    return Valuation::additive(vector_from_json(j.at("values")));
  }
  if (kind == "xos") {
    std::vector<Vector> clauses;
    for (const auto& c : j.at("clauses")) clauses.push_back(vector_from_json(c));
    return Valuation::xos(std::move(clauses));
  }
  if (kind == "budget_capped") {
    return Valuation::budget_capped(valuation_from_json(j.at("inner")),
                                    from_number_or_inf(j.at("cap")));
  }
  throw std::invalid_argument("unknown valuation kind: " + kind);
}

Json parametric_to_json(const ParametricBid& x) {
  Json j;
  j["family"] = x.family;
  j["params"] = x.params;
  j["lo"] = x.lo;
  j["hi"] = x.hi;
  return j;
}

ParametricBid parametric_from_json(const Json& j) {
  std::map<std::string, double> params;
  for (const auto& [k, v] : j.at("params").items()) params[k] = v.get<double>();
  return make_parametric(j.at("family").get<std::string>(), params,
                         j.at("lo").get<double>(), j.at("hi").get<double>());
}

}  // namespace

Json to_json(const Instance& inst) {
  Json j;
  j["n"] = inst.n;
  j["m"] = inst.m;
  j["reserves"] = vector_to_json(inst.reserves);
  Json vals = Json::array();
  for (const auto& v : inst.valuations) vals.push_back(valuation_to_json(v));
  j["valuations"] = vals;
  j["sigmas"] = vector_to_json(inst.sigmas);
  j["taus"] = vector_to_json(inst.taus);
  Json budgets = Json::array();
  for (int i = 0; i < inst.n; ++i) budgets.push_back(number_or_inf(inst.budgets[i]));
  j["budgets"] = budgets;

  Json tb;
  tb["default"] = inst.tiebreak.default_priority;
  Json overrides = Json::array();
  for (const auto& o : inst.tiebreak.overrides) {
    overrides.push_back(
        {{"auction", o.auction}, {"value", o.value}, {"priority", o.priority}});
  }
  tb["overrides"] = overrides;
  Json thresholds = Json::array();
  for (const auto& t : inst.tiebreak.thresholds) {
    thresholds.push_back({{"auction", t.auction},
                          {"threshold", t.threshold},
                          {"below", t.below},
                          {"above", t.above}});
  }
  tb["thresholds"] = thresholds;
  j["tiebreak"] = tb;
  return j;
}

Instance instance_from_json(const Json& j) {
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  std::vector<Valuation> valuations;
  for (const auto& v : j.at("valuations")) {
    valuations.push_back(valuation_from_json(v));
  }
  Vector budgets(n);
  {
    const auto& arr = j.at("budgets");
    for (int i = 0; i < n; ++i) budgets[i] = from_number_or_inf(arr.at(i));
  }
  TieBreakRule rule;
  if (j.contains("tiebreak")) {
    const auto& tb = j.at("tiebreak");
    if (tb.contains("default")) {
      rule.default_priority =
          tb.at("default").get<std::vector<std::vector<int>>>();
    }
    if (tb.contains("overrides")) {
      for (const auto& o : tb.at("overrides")) {
        rule.overrides.push_back({o.at("auction").get<int>(),
                                  o.at("value").get<double>(),
                                  o.at("priority").get<std::vector<int>>()});
      }
    }
    if (tb.contains("thresholds")) {
      for (const auto& t : tb.at("thresholds")) {
        rule.thresholds.push_back({t.at("auction").get<int>(),
                                   t.at("threshold").get<double>(),
                                   t.at("below").get<std::vector<int>>(),
                                   t.at("above").get<std::vector<int>>()});
      }
    }
  }
  std::optional<Vector> taus;
  if (j.contains("taus")) taus = vector_from_json(j.at("taus"));
  return Instance::make(n, m, vector_from_json(j.at("reserves")),
                        std::move(valuations), vector_from_json(j.at("sigmas")),
                        std::move(budgets), std::move(rule), std::move(taus));
}

Json to_json(const RandomBidProfile& profile) {
  Json j;
  if (const auto* fin = std::get_if<FiniteProfile>(&profile)) {
    j["kind"] = "finite";
    Json atoms = Json::array();
    for (const auto& a : fin->atoms) {
      atoms.push_back({{"prob", a.prob}, {"bids", matrix_to_json(a.bids)}});
    }
    j["atoms"] = atoms;
    return j;
  }
  if (const auto* cp = std::get_if<CoupledProfile>(&profile)) {
    j["kind"] = "coupled";
    j["family"] = parametric_to_json(cp->x);
    Json map = Json::array();
    for (int i = 0; i < cp->map.constants.rows(); ++i) {
      Json row = Json::array();
      for (int k = 0; k < cp->map.constants.cols(); ++k) {
        if (cp->map.draws(i, k)) {
          row.push_back("x");
        } else {
          row.push_back(cp->map.constants(i, k));
        }
      }
      map.push_back(row);
    }
    j["map"] = map;
    return j;
  }
  const auto& prod = std::get<ProductProfile>(profile);
  j["kind"] = "product";
  Json comps = Json::array();
  for (const auto& c : prod.components) {
    Json comp;
    if (const auto* fr = std::get_if<ProductComponent::FiniteRow>(&c.row)) {
      comp["kind"] = "finite";
      Json atoms = Json::array();
      for (const auto& [p, row] : fr->atoms) {
        atoms.push_back({{"prob", p}, {"bids", vector_to_json(row)}});
      }
      comp["atoms"] = atoms;
    } else {
      const auto& pr = std::get<ProductComponent::ParametricRow>(c.row);
      comp["kind"] = "parametric";
      comp["family"] = parametric_to_json(pr.x);
      Json row = Json::array();
      for (int k = 0; k < pr.constants.size(); ++k) {
        if (pr.draws[k]) {
          row.push_back("x");
        } else {
          row.push_back(pr.constants[k]);
        }
      }
      comp["row"] = row;
    }
    comps.push_back(comp);
  }
  j["components"] = comps;
  return j;
}

RandomBidProfile profile_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "finite") {
    FiniteProfile out;
    for (const auto& a : j.at("atoms")) {
      out.atoms.push_back(
          {a.at("prob").get<double>(), matrix_from_json(a.at("bids"))});
    }
    return out;
  }
  if (kind == "coupled") {
    CoupledProfile out;
    out.x = parametric_from_json(j.at("family"));
    const auto& map = j.at("map");
    const int n = static_cast<int>(map.size());
    const int m = static_cast<int>(map.at(0).size());
    out.map.constants = Matrix::Zero(n, m);
    out.map.draws.setConstant(n, m, false);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < m; ++k) {
        if (map[i][k].is_string()) {
          out.map.draws(i, k) = true;
        } else {
          out.map.constants(i, k) = map[i][k].get<double>();
        }
      }
    }
    return out;
  }
  if (kind == "product") {
    ProductProfile out;
    for (const auto& comp : j.at("components")) {
      ProductComponent c;
      if (comp.at("kind") == "finite") {
        ProductComponent::FiniteRow fr;
        for (const auto& a : comp.at("atoms")) {
          fr.atoms.push_back(
              {a.at("prob").get<double>(), vector_from_json(a.at("bids"))});
        }
        c.row = fr;
      } else {
        ProductComponent::ParametricRow pr;
        pr.x = parametric_from_json(comp.at("family"));
        const auto& row = comp.at("row");
        const int m = static_cast<int>(row.size());
        pr.constants = Vector::Zero(m);
        pr.draws.assign(m, false);
        for (int k = 0; k < m; ++k) {
          if (row[k].is_string()) {
            pr.draws[k] = true;
          } else {
            pr.constants[k] = row[k].get<double>();
          }
        }
        c.row = pr;
      }
      out.components.push_back(std::move(c));
    }
    return out;
  }
  throw std::invalid_argument("unknown profile kind: " + kind);
}

Json to_json(const EquilibriumReport& report) {
  Json j;
  j["verdict"] = to_string(report.verdict);
  j["profile_feasible"] = report.profile_feasible;
  j["roi_slack"] = vector_to_json(report.feasibility.roi_slack);
  Json budget_slack = Json::array();
  for (int i = 0; i < report.feasibility.budget_slack.size(); ++i) {
    budget_slack.push_back(number_or_inf(report.feasibility.budget_slack[i]));
  }
  j["budget_slack"] = budget_slack;
  j["eq_gain"] = vector_to_json(report.eq_gain);
  j["max_deviation_gain"] = vector_to_json(report.max_deviation_gain);
  j["feasible_deviation_bound"] = vector_to_json(report.feasible_deviation_bound);
  j["epsilon"] = report.epsilon;
  j["sufficient_cce"] = report.sufficient_cce;
  j["is_product"] = report.is_product;
  j["well_supported"] = report.well_supported;
  j["unsold_prob"] = vector_to_json(report.unsold_prob);
  j["lw"] = report.lw;
  j["opt"] = report.opt;
  j["ratio"] = number_or_inf(report.ratio);
  if (!report.detail.empty()) j["detail"] = report.detail;
  return j;
}

Json to_json(const ConstructionReport& report) {
  Json j;
  j["name"] = report.construction.name;
  j["params"] = report.construction.params;
  j["equilibrium_class"] = report.construction.equilibrium_class;
  j["equilibrium"] = to_json(report.equilibrium);
  j["achieved_ratio"] = report.achieved_ratio;
  j["claimed_ratio"] = report.claimed_ratio;
  j["ratio_matches"] = report.ratio_matches;
  j["well_supported_claim"] = report.construction.well_supported_claim;
  j["well_supported_matches"] = report.well_supported_matches;
  j["passed"] = report.passed;
  return j;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j;
  in >> j;
  return instance_from_json(j);
}

RandomBidProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j;
  in >> j;
  return profile_from_json(j);
}

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace fpa
