#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coinvest/beliefs.hpp"
#include "coinvest/common.hpp"
#include "coinvest/game.hpp"
#include "coinvest/rational.hpp"
#include "coinvest/signals.hpp"

namespace coinvest {

// Classifies action histories into cool-off and investment phases, driven by
// a cool-off function T: break period -> cool-off length.
//
// The recursion, verbatim:
//   - the empty history is CoolOff;
//   - if a^{t-1} is Investment, a^t is Investment iff the period-t profile
//     is (I,I);
//   - if a^{t-1} is CoolOff and the longest Investment prefix is a^{s-1},
//     a^t is CoolOff iff t <= s + T(s) - 1;
//   - with no Investment prefix, a^t is CoolOff iff t <= T(1).
//
// Indexing note: under this recursion the first investment ACTING period
// (the first t with a^{t-1} classified Investment) is T(1) + 2, and after a
// break at acting period s the next investment acting period is s + T(s) + 1.
// Prose descriptions of such schemes are sometimes off by one from the
// recursion; this implementation follows the recursion exactly.
class CoolOffScheme {
 public:
  using TFn = std::function<int(int)>;

  static CoolOffScheme from_table(std::vector<int> table, int beyond,
                                  int t0_floor = 1) {
    auto shared = std::make_shared<std::vector<int>>(std::move(table));
    return CoolOffScheme(
        [shared, beyond](int s) {
          if (s >= 1 && s <= static_cast<int>(shared->size())) {
            return (*shared)[s - 1];
          }
          return beyond;
        },
        t0_floor);
  }

  static CoolOffScheme from_rule(TFn rule, int t0_floor) {
    return CoolOffScheme(std::move(rule), t0_floor);
  }

  // Cool-off length for a phase whose first cool-off period is s+1 after a
  // break at acting period s (and the opening phase for s = 1). Memoized;
  // safe under concurrent readers.
  int T(int s) const {
    if (s < 1) throw param_error("CoolOffScheme::T: period index must be >= 1");
    {
      std::lock_guard<std::mutex> lock(state_->mu);
      auto it = state_->memo.find(s);
      if (it != state_->memo.end()) return it->second;
    }
    const int value = rule_(s);
    if (value < 1) throw param_error("CoolOffScheme::T: lengths must be >= 1");
    std::lock_guard<std::mutex> lock(state_->mu);
    state_->memo.emplace(s, value);
    return value;
  }

  int t0_floor() const { return t0_floor_; }

  // First acting period of the opening investment phase.
  int first_investment_period() const { return T(1) + 2; }

  // Acting period of the next investment node after a break at acting
  // period s.
  int next_investment_period_after_break(int s) const { return s + T(s) + 1; }

  // Literal case-by-case recursion over prefixes (with the longest
  // investment prefix located by scanning), memoized per full history.
  Phase classify(std::span<const ActionProfile> history) const {
    const std::string key = encode(history);
    {
      std::lock_guard<std::mutex> lock(state_->mu);
      auto it = state_->classes.find(key);
      if (it != state_->classes.end()) return it->second;
    }
    const int n = static_cast<int>(history.size());
    std::vector<Phase> cls(n + 1);
    cls[0] = Phase::CoolOff;  // empty history
    for (int t = 1; t <= n; ++t) {
      if (cls[t - 1] == Phase::Investment) {
        cls[t] = history[t - 1].both_invest() ? Phase::Investment
                                              : Phase::CoolOff;
        continue;
      }
      // Longest investment prefix a^{s-1} strictly shorter than a^t.
      int s = 0;
      for (int len = t - 1; len >= 1; --len) {
        if (cls[len] == Phase::Investment) {
          s = len + 1;
          break;
        }
      }
      if (s > 0) {
        cls[t] = t <= s + T(s) - 1 ? Phase::CoolOff : Phase::Investment;
      } else {
        cls[t] = t <= T(1) ? Phase::CoolOff : Phase::Investment;
      }
    }
    std::lock_guard<std::mutex> lock(state_->mu);
    state_->classes.emplace(key, cls[n]);
    return cls[n];
  }

  // Whether investing is permitted at acting period `period` given the
  // preceding history.
  Phase acting_phase(int period, std::span<const ActionProfile> history) const {
    if (static_cast<int>(history.size()) != period - 1) {
      throw param_error(
          "acting_phase: history length must equal period - 1");
    }
    return classify(history);
  }

  static std::string encode(std::span<const ActionProfile> history) {
    std::string s;
    s.reserve(history.size() * 2);
    for (const auto& p : history) {
      s.push_back(action_char(p.a1));
      s.push_back(action_char(p.a2));
    }
    return s;
  }

 private:
  CoolOffScheme(TFn rule, int t0_floor)
      : rule_(std::move(rule)),
        t0_floor_(t0_floor),
        state_(std::make_shared<Shared>()) {}

  struct Shared {
    std::mutex mu;
    std::map<int, int> memo;
    std::map<std::string, Phase> classes;
  };

  TFn rule_;
  int t0_floor_ = 1;
  std::shared_ptr<Shared> state_;
};

// Derived scheme parameters, exact plus double mirrors.
struct DerivedParams {
  Rational eps;
  double eps_d = 0.0;
  int T0 = 0;
  std::optional<int> T1;
  std::optional<Rational> delta_bar;
  double delta_bar_d = 0.0;
  Rational p_bar;  // c(1 + 2 eps)
  double p_bar_d = 0.0;
  Rational p_floor;  // (c - c delta) / (1 - c delta)
  double p_floor_d = 0.0;
  std::optional<Rational> Delta;
};

// delta^T0 < (1 - delta)(1 - c - eps), the wedge that makes skipping an
// investment period unprofitable at high beliefs.
inline bool check_threshold_wedge(const GameParams& g, const Rational& eps,
                                  int T0) {
  if (T0 < 0) return false;
  return pow_rational(g.delta, static_cast<unsigned long>(T0)) <
         (1 - g.delta) * (1 - g.c - eps);
}

// c / ((1-eps) - (1-c) delta^T0 / (1-delta)) < c(1+2eps) < 1-eps, the
// two-sided bound that pins investment thresholds below c(1+2eps).
inline bool check_threshold_bound(const GameParams& g, const Rational& eps,
                                  int T0) {
  if (T0 < 0) return false;
  const Rational right = g.c * (1 + 2 * eps);
  if (!(right < 1 - eps)) return false;
  const Rational denom =
      (1 - eps) - (1 - g.c) * pow_rational(g.delta, static_cast<unsigned long>(T0)) /
                      (1 - g.delta);
  if (!(denom > 0)) return false;
  return g.c / denom < right;
}

// The payoff-efficiency conditions on eps for a given slack Delta, with
// p_bar = c(1+2eps):
//   (1-eps)^2 ((1 - 2eps/(1-p_bar))(1-c) + (2eps/(1-p_bar))(-c)) > 1 - c - Delta
//   (1-eps)(-Delta/2) - eps c > -Delta
inline bool check_payoff_eps_conditions(const GameParams& g,
                                        const Rational& eps,
                                        const Rational& Delta,
                                        std::string* witness = nullptr) {
  const Rational p_bar = g.c * (1 + 2 * eps);
  if (!(p_bar < 1)) {
    if (witness) *witness = "c(1+2eps) >= 1";
    return false;
  }
  const Rational frac = 2 * eps / (1 - p_bar);
  const Rational lhsH =
      (1 - eps) * (1 - eps) * ((1 - frac) * (1 - g.c) + frac * (-g.c));
  if (!(lhsH > 1 - g.c - Delta)) {
    if (witness) {
      *witness = "high-state payoff condition fails: (1-eps)^2((1-2eps/(1-p_bar))(1-c) - 2eps c/(1-p_bar)) = " +
                 rational_to_string(lhsH) + " <= 1 - c - Delta";
    }
    return false;
  }
  const Rational lhsL = (1 - eps) * (-Delta / 2) - eps * g.c;
  if (!(lhsL > -Delta)) {
    if (witness) {
      *witness = "low-state payoff condition fails: (1-eps)(-Delta/2) - eps c = " +
                 rational_to_string(lhsL) + " <= -Delta";
    }
    return false;
  }
  return true;
}

namespace detail {

// Smallest non-negative n with delta^n < rhs, or nullopt past the cap.
// Estimated in doubles, then verified exactly around the estimate; the
// verified answer is exact even when the logs are not.
inline std::optional<int> min_pow_below(const Rational& delta,
                                        const Rational& rhs, int cap) {
  if (!(rhs > 0)) return std::nullopt;
  if (rhs > 1) return 0;
  const double est =
      std::log(to_double(rhs)) / std::log(to_double(delta));
  long lo = std::max(0L, static_cast<long>(std::floor(est)) - 4);
  auto below = [&](long n) {
    return pow_rational(delta, static_cast<unsigned long>(n)) < rhs;
  };
  // Walk the exact boundary from a point guaranteed to be on the false side.
  while (lo > 0 && below(lo)) lo -= 4;
  long n = std::max(0L, lo);
  while (n <= cap && !below(n)) ++n;
  if (n > cap) return std::nullopt;
  return static_cast<int>(n);
}

}  // namespace detail

// Smallest T0 satisfying the wedge inequality alone, for a fixed eps.
inline int min_T0_for_wedge(const GameParams& g, const Rational& eps,
                            int cap = 1 << 22) {
  const Rational rhs = (1 - g.delta) * (1 - g.c - eps);
  if (!(rhs > 0)) {
    throw infeasible_error(
        "no T0 satisfies the wedge inequality: 1 - c - eps <= 0 for eps = " +
        rational_to_string(eps));
  }
  auto t0 = detail::min_pow_below(g.delta, rhs, cap);
  if (!t0) {
    throw infeasible_error("wedge inequality not satisfiable within the T0 cap");
  }
  return *t0;
}

// Smallest T0 satisfying BOTH inequalities for a fixed eps, or nullopt when
// the eps-only parts already fail.
inline std::optional<int> min_T0_for_eps(const GameParams& g,
                                         const Rational& eps,
                                         int cap = 1 << 22) {
  if (!(eps > 0 && eps < Rational(1, 2))) return std::nullopt;
  if (!(g.c * (1 + 2 * eps) < 1 - eps)) return std::nullopt;
  // Bound condition rewritten as delta^T0 < (1-delta)((1-eps) - 1/(1+2eps))/(1-c).
  const Rational rhs_bound =
      (1 - g.delta) * ((1 - eps) - Rational(1) / (1 + 2 * eps)) / (1 - g.c);
  const Rational rhs_wedge = (1 - g.delta) * (1 - g.c - eps);
  if (!(rhs_bound > 0) || !(rhs_wedge > 0)) return std::nullopt;
  const Rational rhs = rhs_bound < rhs_wedge ? rhs_bound : rhs_wedge;
  return detail::min_pow_below(g.delta, rhs, cap);
}

struct EpsGrid {
  Rational step = Rational(1, 10000);
  Rational max = Rational(1, 4);
};

struct EpsT0 {
  Rational eps;
  int T0 = 0;
};

// Largest grid eps (and its smallest T0) satisfying the wedge and the
// threshold bound, and, when Delta is supplied, the payoff-efficiency
// conditions as well. eps_seed caps the top of the scan.
inline EpsT0 derive_eps_T0(const GameParams& g,
                           std::optional<Rational> eps_seed = std::nullopt,
                           std::optional<Rational> Delta = std::nullopt,
                           const EpsGrid& grid = {}) {
  Rational top = grid.max;
  if (eps_seed && *eps_seed < top) top = *eps_seed;
  // Snap to the grid from above.
  const Rational ratio = top / grid.step;
  BigInt k = boost::multiprecision::numerator(ratio) /
             boost::multiprecision::denominator(ratio);
  std::string last_witness = "no grid point tried";
  for (; k >= 1; --k) {
    const Rational eps = Rational(k) * grid.step;
    if (!(eps < Rational(1, 2))) continue;
    if (!(g.c * (1 + 2 * eps) < 1 - eps)) {
      last_witness =
          "threshold bound fails on the right: c(1+2eps) >= 1 - eps at eps = " +
          rational_to_string(eps);
      continue;
    }
    if (Delta) {
      std::string w;
      if (!check_payoff_eps_conditions(g, eps, *Delta, &w)) {
        last_witness = w + " at eps = " + rational_to_string(eps);
        continue;
      }
    }
    auto t0 = min_T0_for_eps(g, eps);
    if (!t0) {
      last_witness = "no T0 achieves both inequalities at eps = " +
                     rational_to_string(eps);
      continue;
    }
    return {eps, *t0};
  }
  throw infeasible_error("derive_eps_T0: no feasible eps on the grid; last: " +
                         last_witness);
}

// (c - c delta) / (1 - c delta): no best response invests below this belief.
inline Rational investment_floor(const GameParams& g) {
  return (g.c - g.c * g.delta) / (1 - g.c * g.delta);
}

inline double investment_floor_d(const GameParams& g) {
  return to_double(investment_floor(g));
}

// Worst-case belief floor at period s: the belief after the prior absorbs
// 2s copies of the most pessimistic single-signal LLR (both players' worst
// signals every period so far).
inline double worst_case_belief_floor_log_odds(const GameParams& g,
                                               const SignalModel& m, int s) {
  return clamp_log_odds(g.prior_log_odds + 2.0 * s * m.llr_min);
}

// Builds the cool-off function: T(s) is at least the T0 floor and long
// enough that a player starting the phase at the worst-case belief floor
// ends it with expected posterior above 1 - eps^2 under High. Discretization
// rounds beliefs down, so lengths only ever over-shoot.
//
// relax_first, together with T1, frees the opening phase from the T0 floor
// and pins T(1) = T1 (the payoff-efficiency construction shortens the first
// wait independently of T0).
inline CoolOffScheme derive_cooloff_function(
    const GameParams& g, const DerivedParams& derived, const SignalModel& m,
    bool relax_first = false, int search_cap = 1 << 22) {
  const double target = 1.0 - derived.eps_d * derived.eps_d;
  const int T0 = derived.T0;
  const std::optional<int> T1 = derived.T1;
  if (relax_first && !T1) {
    throw param_error("derive_cooloff_function: relax_first requires T1");
  }
  SignalModel model = m;
  GameParams params = g;
  auto rule = [params, model, target, T0, T1, relax_first,
               search_cap](int s) -> int {
    if (relax_first && s == 1) return *T1;
    const double floor_lo = worst_case_belief_floor_log_odds(params, model, s);
    const double floor_belief = logistic(floor_lo);
    auto clears = [&](int n) {
      return expected_posterior_after_n(floor_belief, model, n, State::High,
                                        BeliefRounding::Down) > target;
    };
    // No n below this can work: even all-best signals cannot lift the mean
    // posterior past the target.
    int lo = 0;
    if (model.llr_max > 0.0) {
      const double gap = logit(target) - floor_lo;
      if (gap > 0.0) lo = static_cast<int>(gap / model.llr_max);
    }
    // Gallop for an upper bracket, then bisect (the expected posterior is
    // non-decreasing in n; the boundary is re-verified below either way).
    int hi = std::max(lo, 1);
    int step = 1;
    while (hi <= search_cap && !clears(hi)) {
      lo = hi;
      hi += step;
      step *= 2;
    }
    if (hi > search_cap) {
      throw resolution_error(
          "derive_cooloff_function: no cool-off length reaches the belief "
          "target");
    }
    while (lo + 1 < hi) {
      const int mid = lo + (hi - lo) / 2;
      (clears(mid) ? hi : lo) = mid;
    }
    int n = clears(lo) ? lo : hi;
    while (n > 0 && clears(n - 1)) --n;  // guard against non-monotone noise
    return std::max(T0, n);
  };
  return CoolOffScheme::from_rule(rule, T0);
}

struct T1DeltaBar {
  int T1 = 0;
  Rational delta_bar;
};

// The payoff-efficiency horizon: the smallest T1 such that after T1 signal
// periods (i) the expected posterior under High clears 1 - eps^2, (ii) both
// players' beliefs clear 1 - eps with probability > 1 - eps under High, and
// (iii) both players' beliefs fall below Delta/(2(1-c)+Delta) with
// probability > 1 - eps under Low. delta_bar is the smallest grid value with
// delta_bar^T1 > 1 - eps.
inline T1DeltaBar derive_T1_delta_bar(const GameParams& g, const Rational& eps,
                                      const SignalModel& m,
                                      const Rational& Delta,
                                      const Rational& grid_step = Rational(1, 10000),
                                      int search_cap = 200000) {
  std::string witness;
  if (!check_payoff_eps_conditions(g, eps, Delta, &witness)) {
    throw infeasible_error("derive_T1_delta_bar: " + witness);
  }
  const double eps_d = to_double(eps);
  const double p0 = g.p0_d;
  const double hi_cut = logit(1.0 - eps_d);
  const double lo_cut =
      logit(to_double(Delta / (2 * (1 - g.c) + Delta)));
  const double target_mean = 1.0 - eps_d * eps_d;
  const double target_prob = 1.0 - eps_d;
  const MergePolicy mp;
  const SignalKernels kernels = SignalKernels::make(m, mp);

  int T1 = -1;
  LlrDist distH = LlrDist::point_mass(0.0);
  LlrDist distL = LlrDist::point_mass(0.0);
  const double l0 = g.prior_log_odds;
  for (int n = 1; n <= search_cap; ++n) {
    distH.convolve(kernels.H, mp);
    distL.convolve(kernels.L, mp);
    const double mean_H = distH.expect_logistic(l0);
    if (mean_H <= target_mean) continue;
    // Strict inequalities in the events; beliefs are monotone in the LLR.
    double p_hi = 0.0;
    for (std::size_t i = 0; i < distH.llrs().size(); ++i) {
      if (l0 + distH.llrs()[i] > hi_cut) p_hi += distH.masses()[i];
    }
    if (p_hi * p_hi <= target_prob) continue;
    double p_lo = 0.0;
    for (std::size_t i = 0; i < distL.llrs().size(); ++i) {
      if (l0 + distL.llrs()[i] < lo_cut) p_lo += distL.masses()[i];
    }
    if (p_lo * p_lo <= target_prob) continue;
    T1 = n;
    break;
  }
  if (T1 < 0) {
    throw infeasible_error(
        "derive_T1_delta_bar: no T1 within the search cap satisfies the "
        "three belief conditions");
  }
  // Smallest grid delta with delta^T1 > 1 - eps, located by an exact scan
  // around the double-precision estimate.
  const Rational one_minus_eps = 1 - eps;
  const double est =
      std::exp(std::log1p(-eps_d) / static_cast<double>(T1));
  long k = static_cast<long>(std::floor(
      est / to_double(grid_step)));
  const long k_max = static_cast<long>(to_double(Rational(1) / grid_step)) - 1;
  auto ok = [&](long kk) {
    if (kk < 1 || kk > k_max) return false;
    const Rational d = Rational(kk) * grid_step;
    return d < 1 && pow_rational(d, static_cast<unsigned long>(T1)) > one_minus_eps;
  };
  while (k > 1 && ok(k - 1)) --k;
  while (k <= k_max && !ok(k)) ++k;
  if (k > k_max) {
    throw infeasible_error(
        "derive_T1_delta_bar: no grid delta below 1 satisfies "
        "delta^T1 > 1 - eps");
  }
  return {T1, Rational(k) * grid_step};
}

// Full derivation pipeline: eps and T0 from the inequalities, the floor and
// threshold cap, and optionally the payoff-efficiency pair (T1, delta_bar).
inline DerivedParams derive_all(const GameParams& g, const SignalModel& m,
                                std::optional<Rational> eps_seed = std::nullopt,
                                std::optional<Rational> Delta = std::nullopt,
                                const EpsGrid& grid = {}) {
  DerivedParams d;
  auto [eps, T0] = derive_eps_T0(g, eps_seed, Delta, grid);
  d.eps = eps;
  d.eps_d = to_double(eps);
  d.T0 = T0;
  d.p_bar = g.c * (1 + 2 * eps);
  d.p_bar_d = to_double(d.p_bar);
  d.p_floor = investment_floor(g);
  d.p_floor_d = to_double(d.p_floor);
  d.Delta = Delta;
  if (Delta) {
    auto [T1, delta_bar] = derive_T1_delta_bar(g, eps, m, *Delta);
    d.T1 = T1;
    d.delta_bar = delta_bar;
    d.delta_bar_d = to_double(delta_bar);
  }
  return d;
}

}  // namespace coinvest
