#pragma once

#include <vector>

#include "fpa/core.hpp"
#include "fpa/profiles.hpp"

namespace fpa::detail {

/// One cell of the piecewise decomposition of a scenario: either the atom at
/// the lower support endpoint or an open interval between breakpoints, with
/// the auction outcome resolved and payments already integrated.
struct EvaluatedPiece {
  double prob = 0.0;
  Outcome outcome;
  Vector payments;    // per agent, E[p_i * 1{piece}]
  Vector item_price;  // per item,  E[winning payment * 1{piece}]
};

/// Splits a scenario at every bid level the shared draw can cross, resolves
/// each cell with `run_auctions` (exact tie overrides only at the atom), and
/// integrates draw payments with quadrature.
std::vector<EvaluatedPiece> evaluate_scenario(const Instance& inst,
                                              const Scenario& sc);

/// Probability that `bid` by `agent` wins auction `j` under the scenario
/// (the agent's own row in the scenario is ignored and replaced by the bid).
double win_probability(const Instance& inst, const Scenario& sc, int agent,
                       int auction, double bid);

}  // namespace fpa::detail
