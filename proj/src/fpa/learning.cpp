#include "fpa/learning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fpa {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool on_grid(double v, double inc) {
  const double q = v / inc;
  return std::abs(q - std::round(q)) < 1e-9;
}

}  // namespace

void RepeatedGame::validate() const {
  require(values.size() >= 2, "repeated game: need at least two agents");
  require(values.size() == sigmas.size(), "repeated game: sigma size");
  require(increment > 0, "repeated game: increment must be positive");
  require(rounds >= 1, "repeated game: rounds must be positive");
  require(reserve >= 0 && on_grid(reserve, increment),
          "repeated game: reserve off the bid grid");
  for (int i = 0; i < values.size(); ++i) {
    require(values[i] > 0 && on_grid(values[i], increment),
            "repeated game: value off the bid grid");
    require(sigmas[i] >= 0 && sigmas[i] <= 1,
            "repeated game: sigma outside [0,1]");
  }
}

int RepeatedGame::num_actions(int agent) const {
  return static_cast<int>(std::round(values[agent] / increment)) + 1;
}

double RepeatedGame::bid_of(int agent, int action) const {
  (void)agent;
  return action * increment;
}

double RepeatedGame::expected_gain(int agent, double bid,
                                   const std::vector<double>& all_bids) const {
  if (bid + 1e-12 < reserve) return 0.0;
  double top = -1.0;
  int tied = 1;  // the agent themselves
  for (int o = 0; o < static_cast<int>(all_bids.size()); ++o) {
    if (o == agent) continue;
    const double b = all_bids[o];
    if (b + 1e-12 < reserve) continue;
    if (b > top + 1e-12) {
      top = b;
      tied = 1;
    } else if (std::abs(b - top) <= 1e-12) {
      ++tied;
    }
  }
  double share = 0.0;
  if (top < 0 || bid > top + 1e-12) {
    share = 1.0;
  } else if (std::abs(bid - top) <= 1e-12) {
    share = 1.0 / (tied + 1);
  }
  return share * (values[agent] - sigmas[agent] * bid);
}

// ---------------------------------------------------------------------------
// Simulation

History run_repeated(const RepeatedGame& game,
                     const std::vector<LearnerConfig>& configs) {
  game.validate();
  const int n = static_cast<int>(game.values.size());
  require(static_cast<int>(configs.size()) == n,
          "run_repeated: one learner config per agent");

  std::vector<std::mt19937_64> rng;
  rng.reserve(n + 1);
  for (int i = 0; i < n; ++i) rng.emplace_back(configs[i].seed);
  std::mt19937_64 tie_rng(0x9e3779b97f4a7c15ULL);

  std::vector<int> num_actions(n);
  std::vector<double> hedge_rate(n);
  std::vector<std::vector<double>> cum_gain(n);
  for (int i = 0; i < n; ++i) {
    num_actions[i] = game.num_actions(i);
    cum_gain[i].assign(num_actions[i], 0.0);
    hedge_rate[i] = configs[i].rate_scale *
                    std::sqrt(std::log(std::max(2, num_actions[i])) /
                              static_cast<double>(game.rounds));
  }

  History h;
  h.bids.reserve(game.rounds);
  h.winner.reserve(game.rounds);
  h.payment.reserve(game.rounds);
  h.gains.reserve(game.rounds);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> action(n, 0);
  std::vector<double> bids(n, 0.0);

  for (int round = 0; round < game.rounds; ++round) {
    for (int i = 0; i < n; ++i) {
      const auto& cfg = configs[i];
      if (cfg.algo == LearnerConfig::Algo::kHedge) {
        // Exponential weights over cumulative counterfactual gains.
        double max_score = -kInf;
        for (int k = 0; k < num_actions[i]; ++k) {
          max_score = std::max(max_score, hedge_rate[i] * cum_gain[i][k]);
        }
        double total = 0.0;
        std::vector<double> w(num_actions[i]);
        for (int k = 0; k < num_actions[i]; ++k) {
          w[k] = std::exp(hedge_rate[i] * cum_gain[i][k] - max_score);
          total += w[k];
        }
        double u = unif(rng[i]) * total;
        int pick = num_actions[i] - 1;
        for (int k = 0; k < num_actions[i]; ++k) {
          u -= w[k];
          if (u <= 0) {
            pick = k;
            break;
          }
        }
        action[i] = pick;
      } else {
        const double explore =
            std::min(1.0, cfg.explore_scale /
                              std::cbrt(static_cast<double>(round + 1)));
        if (unif(rng[i]) < explore) {
          std::uniform_int_distribution<int> pick(0, num_actions[i] - 1);
          action[i] = pick(rng[i]);
        } else {
          action[i] = static_cast<int>(
              std::max_element(cum_gain[i].begin(), cum_gain[i].end()) -
              cum_gain[i].begin());
        }
      }
      bids[i] = game.bid_of(i, action[i]);
    }

    // Resolve the round: uniform tie among reserve-meeting top bidders.
    double top = -1.0;
    std::vector<int> tied;
    for (int i = 0; i < n; ++i) {
      if (bids[i] + 1e-12 < game.reserve) continue;
      if (bids[i] > top + 1e-12) {
        top = bids[i];
        tied.assign(1, i);
      } else if (std::abs(bids[i] - top) <= 1e-12) {
        tied.push_back(i);
      }
    }
    int winner = -1;
    if (!tied.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
      winner = tied[pick(tie_rng)];
    }

    // Full-information update with expected-tie counterfactual gains.
    std::vector<double> realized(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < num_actions[i]; ++k) {
        const double g = game.expected_gain(i, game.bid_of(i, k), bids);
        cum_gain[i][k] += g;
        if (k == action[i]) realized[i] = g;
      }
    }

    h.bids.push_back(bids);
    h.winner.push_back(winner);
    h.payment.push_back(winner >= 0 ? bids[winner] : 0.0);
    h.gains.push_back(realized);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Accounting

double regret(const RepeatedGame& game, const History& history, int agent) {
  const int rounds = static_cast<int>(history.bids.size());
  const int actions = game.num_actions(agent);
  double realized = 0.0;
  std::vector<double> fixed(actions, 0.0);
  for (int t = 0; t < rounds; ++t) {
    realized += history.gains[t][agent];
    for (int k = 0; k < actions; ++k) {
      fixed[k] +=
          game.expected_gain(agent, game.bid_of(agent, k), history.bids[t]);
    }
  }
  return *std::max_element(fixed.begin(), fixed.end()) - realized;
}

namespace {

int window_start(const History& history, double window_fraction) {
  const int rounds = static_cast<int>(history.bids.size());
  const int len = std::max(
      1, static_cast<int>(std::llround(rounds * window_fraction)));
  return rounds - len;
}

}  // namespace

FiniteProfile empirical_cce(const RepeatedGame& game, const History& history,
                            double window_fraction) {
  const int n = static_cast<int>(game.values.size());
  const int start = window_start(history, window_fraction);
  const int rounds = static_cast<int>(history.bids.size());

  std::map<std::vector<double>, int> counts;
  for (int t = start; t < rounds; ++t) counts[history.bids[t]] += 1;

  FiniteProfile profile;
  const double len = rounds - start;
  for (const auto& [bids, count] : counts) {
    Matrix b(n, 1);
    for (int i = 0; i < n; ++i) b(i, 0) = bids[i];
    profile.atoms.push_back({count / len, b});
  }
  return profile;
}

double empirical_cce_epsilon(const RepeatedGame& game, const History& history,
                             double window_fraction) {
  const int n = static_cast<int>(game.values.size());
  const int start = window_start(history, window_fraction);
  const int rounds = static_cast<int>(history.bids.size());
  const double len = rounds - start;

  double eps = 0.0;
  for (int i = 0; i < n; ++i) {
    double realized = 0.0;
    std::vector<double> fixed(game.num_actions(i), 0.0);
    for (int t = start; t < rounds; ++t) {
      realized += history.gains[t][i];
      for (int k = 0; k < game.num_actions(i); ++k) {
        fixed[k] += game.expected_gain(i, game.bid_of(i, k), history.bids[t]);
      }
    }
    const double best = *std::max_element(fixed.begin(), fixed.end());
    eps = std::max(eps, (best - realized) / len);
  }
  return eps;
}

std::vector<std::vector<double>> window_support(const RepeatedGame& game,
                                                const History& history,
                                                double window_fraction,
                                                double min_freq) {
  const int n = static_cast<int>(game.values.size());
  const int start = window_start(history, window_fraction);
  const int rounds = static_cast<int>(history.bids.size());
  const double len = rounds - start;

  std::vector<std::vector<double>> support(n);
  for (int i = 0; i < n; ++i) {
    std::map<double, int> counts;
    for (int t = start; t < rounds; ++t) counts[history.bids[t][i]] += 1;
    for (const auto& [bid, count] : counts) {
      if (count / len >= min_freq) support[i].push_back(bid);
    }
  }
  return support;
}

std::vector<DominatedAction> co_undominated_check(
    const RepeatedGame& game, const std::vector<std::vector<double>>& support) {
  require(game.values.size() == 2 && support.size() == 2,
          "co_undominated_check: two-agent games only");
  std::vector<DominatedAction> dominated;

  for (int agent = 0; agent < 2; ++agent) {
    const int other = 1 - agent;
    if (support[other].empty()) continue;
    auto gain_against = [&](double own, double opp) {
      std::vector<double> bids(2);
      bids[agent] = own;
      bids[other] = opp;
      return game.expected_gain(agent, own, bids);
    };
    for (double a : support[agent]) {
      for (int k = 0; k < game.num_actions(agent); ++k) {
        const double b = game.bid_of(agent, k);
        if (b == a) continue;
        bool weakly_better = true;
        bool strictly_somewhere = false;
        for (double opp : support[other]) {
          const double ga = gain_against(a, opp);
          const double gb = gain_against(b, opp);
          if (gb < ga - 1e-12) {
            weakly_better = false;
            break;
          }
          if (gb > ga + 1e-12) strictly_somewhere = true;
        }
        if (weakly_better && strictly_somewhere) {
          dominated.push_back({agent, a, b});
          break;
        }
      }
    }
  }
  return dominated;
}

double well_supported_fraction(const History& history, double reserve) {
  return well_supported_fraction_window(history, reserve, 1.0);
}

double well_supported_fraction_window(const History& history, double reserve,
                                      double window_fraction) {
  (void)reserve;  // the winner is recorded only when the reserve was met
  const int start = window_start(history, window_fraction);
  const int rounds = static_cast<int>(history.bids.size());
  int sold = 0;
  for (int t = start; t < rounds; ++t) sold += history.winner[t] >= 0 ? 1 : 0;
  return static_cast<double>(sold) / (rounds - start);
}

std::string history_csv(const RepeatedGame& game, const History& history) {
  const int n = static_cast<int>(game.values.size());
  std::ostringstream os;
  os.precision(10);
  os << "round";
  for (int i = 0; i < n; ++i) os << ",bid" << i;
  os << ",winner,payment";
  for (int i = 0; i < n; ++i) os << ",gain" << i;
  os << "\n";
  for (std::size_t t = 0; t < history.bids.size(); ++t) {
    os << t;
    for (int i = 0; i < n; ++i) os << "," << history.bids[t][i];
    os << "," << history.winner[t] << "," << history.payment[t];
    for (int i = 0; i < n; ++i) os << "," << history.gains[t][i];
    os << "\n";
  }
  return os.str();
}

}  // namespace fpa
