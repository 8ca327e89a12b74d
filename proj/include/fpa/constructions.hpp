#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpa/core.hpp"
#include "fpa/equilibrium.hpp"
#include "fpa/profiles.hpp"

namespace fpa {

/// A packaged worst-case market: instance, candidate equilibrium profile,
/// and the closed-form welfare ratio it is built to achieve.
struct Construction {
  std::string name;
  std::map<std::string, double> params;
  Instance instance;
  RandomBidProfile profile;
  double claimed_ratio = 0.0;
  std::string equilibrium_class;  // "MNE" or "CCE"
  bool well_supported_claim = true;
};

/// Registered names:
///   universal_budget        (t1, t2)
///   budget_commontype       (t, a)        t above the flat/curved threshold
///   budgetfree_hybrid       (t, a)
///   reserve_hightype        (t, eta)      t in [1-1/e, 1]
///   reserve_valuemax        (eta, eps)
///   cce_not_well_supported  (r)
///   submod_mne              (eps, t2)
std::vector<std::string> registered_constructions();

/// Builds a registered construction; omitted parameters take their default
/// values and out-of-range parameters throw.
Construction build_construction(const std::string& name,
                                const std::map<std::string, double>& params = {});

struct ConstructionReport {
  Construction construction;
  EquilibriumReport equilibrium;
  double achieved_ratio = 0.0;
  double claimed_ratio = 0.0;
  bool ratio_matches = false;       // |achieved - claimed| <= ratio_tol
  bool well_supported_matches = false;
  bool passed = false;              // verified + ratio + well-supportedness
};

/// Full pipeline: feasibility, equilibrium check (per the claimed class),
/// well-supportedness, welfare ratio against the claimed closed form.
ConstructionReport verify_construction(
    const std::string& name, const std::map<std::string, double>& params = {},
    double tol = 1e-7, double ratio_tol = 1e-6);

/// Diagnostics for the optimizing parameter a* = -W0(-e^(-t-1)) of the
/// common-type constructions: range membership and the closed-form identity
/// of the ratio at a*.
struct ClaimDomainReport {
  double a_star = 0.0;
  bool in_range = false;        // a* in (1-t, 1/e]
  double lower_margin = 0.0;    // a* - (1-t)
  double identity_residual = 0.0;
};
ClaimDomainReport claim_domain_check(double t);

/// Ratio closed form (1 - a + a ln a + t) / (1 - a + a ln a + a t).
double commontype_ratio(double t, double a);

}  // namespace fpa
