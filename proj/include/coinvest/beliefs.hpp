#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "coinvest/common.hpp"
#include "coinvest/game.hpp"
#include "coinvest/llr_dist.hpp"
#include "coinvest/rational.hpp"
#include "coinvest/signals.hpp"

namespace coinvest {

// Both per-state signal kernels, built once per model.
struct SignalKernels {
  LlrDist H, L;

  static SignalKernels make(const SignalModel& m, const MergePolicy& mp = {}) {
    return {signal_kernel(m, State::High, mp), signal_kernel(m, State::Low, mp)};
  }
  const LlrDist& of(State s) const { return s == State::High ? H : L; }
};

// The public-information side of belief formation, shared by both players.
//
// row[i][theta] is the filtering distribution of player i's cumulative
// own-signal LLR conditional on the state being theta and on player i's
// observed actions being consistent with their threshold policy.
// action_evidence[i] accumulates log P(i's action path | H) - log(... | L);
// it is the evidence the OTHER player extracts from watching i.
//
// With deterministic threshold policies a player's posterior log-odds are
//   prior + own cumulative LLR + action_evidence[opponent],
// which is what makes this board a sufficient public statistic.
struct PublicBoard {
  std::array<std::array<LlrDist, 2>, 2> row;
  std::array<double, 2> action_evidence{0.0, 0.0};

  static PublicBoard initial() {
    PublicBoard b;
    for (int i = 0; i < 2; ++i) {
      b.row[i][0] = LlrDist::point_mass(0.0);
      b.row[i][1] = LlrDist::point_mass(0.0);
    }
    return b;
  }

  LlrDist& of(int player, State s) { return row[player][s == State::High ? 0 : 1]; }
  const LlrDist& of(int player, State s) const {
    return row[player][s == State::High ? 0 : 1];
  }

  // One more period of private signals for both players.
  void advance_signals(const SignalKernels& k, const MergePolicy& mp) {
    for (int i = 0; i < 2; ++i) {
      of(i, State::High).convolve(k.H, mp);
      of(i, State::Low).convolve(k.L, mp);
    }
  }

  void advance_signals(const SignalKernels& k, int periods,
                       const MergePolicy& mp) {
    for (int t = 0; t < periods; ++t) advance_signals(k, mp);
  }

  struct ActionLikelihood {
    double pH = 1.0;  // P(observed action | High, history so far)
    double pL = 1.0;
    bool off_path = false;
    double evidence() const {
      return clamp_log_odds(std::log(std::max(pH, 1e-300)) -
                            std::log(std::max(pL, 1e-300)));
    }
  };

  // Likelihood of `player` taking action `a` when they invest iff their
  // cumulative LLR clears `cutoff` (ties invest).
  ActionLikelihood action_likelihood(int player, Action a,
                                     double cutoff) const {
    const bool invest = a == Action::Invest;
    ActionLikelihood out;
    out.pH = invest ? of(player, State::High).mass_at_least(cutoff)
                    : 1.0 - of(player, State::High).mass_at_least(cutoff);
    out.pL = invest ? of(player, State::Low).mass_at_least(cutoff)
                    : 1.0 - of(player, State::Low).mass_at_least(cutoff);
    out.off_path = out.pH <= 0.0 && out.pL <= 0.0;
    return out;
  }

  // Conditions the player's rows on the observed action and accrues its
  // evidence. A probability-zero observation under both states follows the
  // as-if-the-other-action-was-seen convention: nothing changes.
  ActionLikelihood apply_action(int player, Action a, double cutoff) {
    ActionLikelihood like = action_likelihood(player, a, cutoff);
    if (like.off_path) return like;
    const bool keep_at_least = a == Action::Invest;
    for (State s : {State::High, State::Low}) {
      of(player, s).truncate_keep(cutoff, keep_at_least);
    }
    action_evidence[player] =
        clamp_log_odds(action_evidence[player] + like.evidence());
    return like;
  }
};

// One player's belief state: a value type. The board rides along so that a
// BeliefState can be updated in isolation; the simulator shares boards across
// episodes through its node cache instead.
struct BeliefState {
  double prior_log_odds = 0.0;
  double own_llr_sum = 0.0;
  int me = 0;
  PublicBoard board = PublicBoard::initial();

  double log_odds() const {
    return clamp_log_odds(prior_log_odds + own_llr_sum +
                          board.action_evidence[1 - me]);
  }
  double belief() const { return logistic(log_odds()); }

  static BeliefState initial(double prior_log_odds, int player) {
    BeliefState b;
    b.prior_log_odds = prior_log_odds;
    b.me = player;
    return b;
  }
};

inline BeliefState update_own_signal(BeliefState b, const SignalModel& m,
                                     int symbol) {
  b.own_llr_sum += log_likelihood_ratio(m, symbol);
  return b;
}

// The opponent privately saw one more signal; their rows spread accordingly.
inline BeliefState advance_opponent_signal(BeliefState b,
                                           const SignalKernels& k,
                                           const MergePolicy& mp = {}) {
  b.board.of(1 - b.me, State::High).convolve(k.H, mp);
  b.board.of(1 - b.me, State::Low).convolve(k.L, mp);
  return b;
}

// Conditions on the opponent's observed action. At CoolOff histories the
// prescribed action carries no information and the state is unchanged. At
// Investment histories the opponent invests iff their belief clears
// `opponent_threshold_log_odds`, i.e. iff their cumulative LLR clears the
// cutoff implied by the prior and by the evidence of our own past actions.
inline BeliefState update_opponent_action(BeliefState b, Action observed,
                                          double opponent_threshold_log_odds,
                                          Phase phase) {
  if (phase != Phase::Investment) return b;
  const int opp = 1 - b.me;
  const double cutoff =
      opponent_threshold_log_odds - b.prior_log_odds - b.board.action_evidence[b.me];
  b.board.apply_action(opp, observed, cutoff);
  return b;
}

// ---------------------------------------------------------------------------
// Finite probability spaces with exact weights, for the appendix-style
// verification records.

struct Partition {
  std::vector<int> cell_of;
  int num_cells = 0;

  static Partition make(std::vector<int> cell_of) {
    Partition p;
    p.cell_of = std::move(cell_of);
    int max_cell = -1;
    for (int c : p.cell_of) {
      if (c < 0) throw param_error("Partition: negative cell id");
      max_cell = std::max(max_cell, c);
    }
    p.num_cells = max_cell + 1;
    std::vector<bool> seen(p.num_cells, false);
    for (int c : p.cell_of) seen[c] = true;
    for (bool s : seen) {
      if (!s) throw param_error("Partition: cell ids must be contiguous");
    }
    return p;
  }
};

// Every cell of `fine` must lie inside a single cell of `coarse`.
inline bool refines(const Partition& fine, const Partition& coarse) {
  if (fine.cell_of.size() != coarse.cell_of.size()) return false;
  std::vector<int> owner(fine.num_cells, -1);
  for (std::size_t a = 0; a < fine.cell_of.size(); ++a) {
    int& o = owner[fine.cell_of[a]];
    if (o == -1) {
      o = coarse.cell_of[a];
    } else if (o != coarse.cell_of[a]) {
      return false;
    }
  }
  return true;
}

struct FiniteProbSpace {
  std::vector<Rational> weight;

  std::size_t size() const { return weight.size(); }

  static FiniteProbSpace make(std::vector<Rational> weight) {
    Rational sum(0);
    for (const auto& w : weight) {
      if (w <= 0) throw param_error("FiniteProbSpace: weights must be positive");
      sum += w;
    }
    if (sum != 1) throw param_error("FiniteProbSpace: weights must sum to 1");
    return {std::move(weight)};
  }
};

struct ConditionedCellCheck {
  int cell = 0;
  Rational p;    // P(E | coarse cell)
  Rational lhs;  // E[q | E, coarse cell]
  Rational rhs;  // E[q^2 | coarse cell] / E[q | coarse cell]
  bool equal = false;
  bool dominates = false;  // lhs >= p
};

struct ConditionedPosteriorReport {
  bool ok = true;
  std::vector<ConditionedCellCheck> cells;
};

// Verifies, cell by coarse cell and in exact arithmetic, that the posterior
// probability q of an event conditioned on that same event averages to
// E[q^2|p]/E[q|p] and dominates the prior probability p. q is measurable with
// respect to the finer partition, p with respect to the coarser one.
inline ConditionedPosteriorReport conditioned_posterior_mean(
    const FiniteProbSpace& space, const Partition& coarse,
    const Partition& fine, const std::vector<bool>& event) {
  if (event.size() != space.size() || coarse.cell_of.size() != space.size() ||
      fine.cell_of.size() != space.size()) {
    throw param_error("conditioned_posterior_mean: size mismatch");
  }
  if (!refines(fine, coarse)) {
    throw param_error("conditioned_posterior_mean: partitions must be nested");
  }
  Rational event_mass(0);
  for (std::size_t a = 0; a < space.size(); ++a) {
    if (event[a]) event_mass += space.weight[a];
  }
  if (event_mass == 0) {
    throw param_error("conditioned_posterior_mean: event has zero probability");
  }

  // Per fine cell: total mass and event mass, for q = P(E | fine cell).
  std::vector<Rational> fmass(fine.num_cells, Rational(0));
  std::vector<Rational> femass(fine.num_cells, Rational(0));
  for (std::size_t a = 0; a < space.size(); ++a) {
    fmass[fine.cell_of[a]] += space.weight[a];
    if (event[a]) femass[fine.cell_of[a]] += space.weight[a];
  }

  ConditionedPosteriorReport report;
  for (int cell = 0; cell < coarse.num_cells; ++cell) {
    Rational cmass(0), cemass(0);
    Rational eq(0), eq2(0), eq_on_event(0);
    for (std::size_t a = 0; a < space.size(); ++a) {
      if (coarse.cell_of[a] != cell) continue;
      const Rational q = femass[fine.cell_of[a]] / fmass[fine.cell_of[a]];
      cmass += space.weight[a];
      eq += space.weight[a] * q;
      eq2 += space.weight[a] * q * q;
      if (event[a]) {
        cemass += space.weight[a];
        eq_on_event += space.weight[a] * q;
      }
    }
    if (cmass == 0 || cemass == 0) continue;  // conditioning undefined here
    ConditionedCellCheck check;
    check.cell = cell;
    check.p = cemass / cmass;
    check.lhs = eq_on_event / cemass;
    check.rhs = (eq2 / cmass) / (eq / cmass);
    check.equal = check.lhs == check.rhs;
    check.dominates = check.lhs >= check.p;
    report.ok = report.ok && check.equal && check.dominates;
    report.cells.push_back(std::move(check));
  }
  return report;
}

struct TailBoundCheck {
  bool applicable = false;
  bool holds = false;
  Rational mean;
  Rational tail_prob;  // P[X > 1 - eps]
};

// For X in [0,1] with mean at least 1 - eps^2, checks P[X > 1-eps] >= 1-eps.
// Reports not-applicable (rather than failure) when the mean precondition is
// unmet.
inline TailBoundCheck markov_tail_bound_check(
    const std::vector<std::pair<Rational, Rational>>& dist,
    const Rational& eps) {
  if (!(eps > 0 && eps < 1)) throw param_error("eps must lie in (0,1)");
  Rational mass(0), mean(0);
  for (const auto& [value, weight] : dist) {
    if (value < 0 || value > 1) throw param_error("values must lie in [0,1]");
    if (weight < 0) throw param_error("weights must be non-negative");
    mass += weight;
    mean += weight * value;
  }
  if (mass == 0) throw param_error("empty distribution");
  mean /= mass;

  TailBoundCheck out;
  out.mean = mean;
  out.applicable = mean >= 1 - eps * eps;
  Rational tail(0);
  const Rational cut = 1 - eps;
  for (const auto& [value, weight] : dist) {
    if (value > cut) tail += weight;
  }
  out.tail_prob = tail / mass;
  out.holds = out.applicable && out.tail_prob >= 1 - eps;
  return out;
}

// ---------------------------------------------------------------------------
// Expected posterior after n further own signals.

enum class BeliefRounding { Nearest, Down };

namespace detail {

inline double log_falling_choose(int n, const std::vector<int>& counts) {
  double lg = std::lgamma(n + 1.0);
  for (int c : counts) lg -= std::lgamma(c + 1.0);
  return lg;
}

// Number of compositions of n into k parts: C(n+k-1, k-1), saturating.
inline double composition_count(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k - 1; ++i) {
    r *= static_cast<double>(n + i) / i;
    if (r > 1e15) return 1e15;
  }
  return r;
}

}  // namespace detail

// E[ logistic(logit(start) + sum of n signal LLRs) | state ], the expected
// posterior on High after n more private signals. Exact lattice enumeration
// over signal-count vectors when that is affordable, otherwise an n-fold
// convolution on a rounded grid. Down rounding only ever under-states the
// result, which is the direction every cool-off derivation needs.
inline double expected_posterior_after_n(double start_belief,
                                         const SignalModel& m, int n,
                                         State state,
                                         BeliefRounding rounding =
                                             BeliefRounding::Nearest,
                                         double certify_tol = 1e-6) {
  if (n < 0) throw param_error("expected_posterior_after_n: n must be >= 0");
  if (!(start_belief >= 0.0 && start_belief <= 1.0)) {
    throw param_error("expected_posterior_after_n: start belief outside [0,1]");
  }
  if (n == 0) return start_belief;
  if (start_belief == 0.0) return 0.0;
  if (start_belief == 1.0) return 1.0;
  const double offset = logit(start_belief);
  const int k = m.size();
  const auto& f = m.f_d(state);
  // Guard against double-rounding noise when the caller needs a lower bound.
  const double slack =
      rounding == BeliefRounding::Down ? 1e-9 : 0.0;

  if (detail::composition_count(n, k) <= 4e6) {
    // Exact enumeration over count vectors; each LLR value is formed in one
    // shot from the counts, so no rounding accumulates across periods.
    std::vector<int> counts(k, 0);
    counts[0] = n;
    double expect = 0.0;
    std::vector<double> logf(k);
    for (int i = 0; i < k; ++i) logf[i] = std::log(f[i]);
    while (true) {
      double lam = 0.0, lmass = detail::log_falling_choose(n, counts);
      for (int i = 0; i < k; ++i) {
        lam += counts[i] * m.llr[i];
        lmass += counts[i] * logf[i];
      }
      expect += std::exp(lmass) * logistic(offset + lam);
      // next composition of n into k parts
      int i = k - 2;
      while (i >= 0 && counts[i] == 0) --i;
      if (i < 0) break;
      --counts[i];
      int rest = 1;
      for (int j = i + 1; j < k - 1; ++j) {
        rest += counts[j];
        counts[j] = 0;
      }
      rest += counts[k - 1];
      counts[k - 1] = 0;
      counts[i + 1] = rest;
    }
    return std::max(0.0, expect - slack);
  }

  // Grid fallback with certification: the Down and Up roundings must agree to
  // certify the requested tolerance.
  MergePolicy down;
  down.rounding = MergePolicy::Rounding::Down;
  down.max_atoms = 4000;
  down.grid_step = 1e-3;
  MergePolicy up = down;
  up.rounding = MergePolicy::Rounding::Up;
  const LlrDist kernel = signal_kernel(m, state);
  const double lo = nfold(kernel, n, down).expect_logistic(offset);
  const double hi = nfold(kernel, n, up).expect_logistic(offset);
  if (hi - lo > certify_tol) {
    throw resolution_error(
        "expected_posterior_after_n: grid resolution cannot certify the "
        "requested tolerance");
  }
  if (rounding == BeliefRounding::Down) return std::max(0.0, lo - slack);
  return 0.5 * (lo + hi);
}

}  // namespace coinvest
