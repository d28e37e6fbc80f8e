#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "coinvest/common.hpp"
#include "coinvest/rational.hpp"

namespace coinvest {

// Binary state of nature: investment pays off only in High.
enum class State : std::uint8_t { High = 0, Low = 1 };

enum class Action : std::uint8_t { Invest = 0, NoInvest = 1 };

inline char state_char(State s) { return s == State::High ? 'H' : 'L'; }
inline char action_char(Action a) { return a == Action::Invest ? 'I' : 'N'; }

struct ActionProfile {
  Action a1 = Action::NoInvest;
  Action a2 = Action::NoInvest;

  bool both_invest() const {
    return a1 == Action::Invest && a2 == Action::Invest;
  }
  Action by(int player) const { return player == 0 ? a1 : a2; }
  friend bool operator==(const ActionProfile&, const ActionProfile&) = default;
};

inline constexpr ActionProfile kBothInvest{Action::Invest, Action::Invest};
inline constexpr ActionProfile kBothNoInvest{Action::NoInvest,
                                             Action::NoInvest};

// History-classification label. Investing is permitted only at histories
// labeled Investment; at CoolOff histories the prescribed action is NoInvest.
enum class Phase : std::uint8_t { CoolOff = 0, Investment = 1 };

inline char phase_char(Phase p) { return p == Phase::Investment ? 'I' : 'C'; }

// Stage-game parameters. Exact values drive the derivations and their
// re-verification; double mirrors drive simulation and the DP.
struct GameParams {
  Rational c;      // investment cost, in (0,1)
  Rational delta;  // discount factor, in (0,1)
  Rational p0;     // prior probability of High, in (0,1)

  double c_d = 0.0;
  double delta_d = 0.0;
  double p0_d = 0.0;
  double prior_log_odds = 0.0;

  static GameParams make(Rational c, Rational delta, Rational p0) {
    auto open01 = [](const Rational& x, const char* name) {
      if (!(x > 0 && x < 1)) {
        throw param_error(std::string(name) + " must lie strictly in (0,1)");
      }
    };
    open01(c, "c");
    open01(delta, "delta");
    open01(p0, "p0");
    GameParams g;
    g.c = std::move(c);
    g.delta = std::move(delta);
    g.p0 = std::move(p0);
    g.c_d = to_double(g.c);
    g.delta_d = to_double(g.delta);
    g.p0_d = to_double(g.p0);
    g.prior_log_odds = logit(g.p0_d);
    return g;
  }
};

// Stage payoffs. Investing costs c and returns 1 only when the state is High
// and the other player invests too; not investing is worth exactly 0.
template <typename Scalar>
std::pair<Scalar, Scalar> stage_payoff(ActionProfile profile, State state,
                                       const Scalar& c) {
  if (!(c > Scalar(0) && c < Scalar(1))) {
    throw param_error("stage_payoff: c must lie strictly in (0,1)");
  }
  auto one = [&](Action own, Action other) -> Scalar {
    if (own == Action::NoInvest) return Scalar(0);
    if (state == State::High && other == Action::Invest) return Scalar(1) - c;
    return -c;
  };
  return {one(profile.a1, profile.a2), one(profile.a2, profile.a1)};
}

struct DiscountedPayoff {
  double value = 0.0;       // (1-delta) sum of delta^{t-1} u_t over the stream
  double tail_bound = 0.0;  // delta^T * u_bound, the truncation error bound
};

// Normalized discounted value of a truncated payoff stream. The bound
// separates truncation error from sampling error; u_bound is the caller's
// bound on |u_t| past the truncation point.
inline DiscountedPayoff discounted_payoff(std::span<const double> stream,
                                          double delta,
                                          double u_bound = 1.0) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw param_error("discounted_payoff: delta must lie in (0,1)");
  }
  if (stream.empty()) {
    throw param_error("discounted_payoff: empty stream and no declared tail");
  }
  double value = 0.0;
  double w = 1.0 - delta;
  for (double u : stream) {
    value += w * u;
    w *= delta;
  }
  // w == (1-delta) * delta^T here.
  return {value, w / (1.0 - delta) * u_bound};
}

// Same, with a declared constant tail value from period T+1 on. Exact, so the
// bound is zero.
inline DiscountedPayoff discounted_payoff_with_tail(
    std::span<const double> stream, double delta, double tail_value) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw param_error("discounted_payoff: delta must lie in (0,1)");
  }
  double value = 0.0;
  double w = 1.0 - delta;
  for (double u : stream) {
    value += w * u;
    w *= delta;
  }
  value += w / (1.0 - delta) * tail_value;
  return {value, 0.0};
}

// Minimax payoff. The opponent commits to a mixture over {Invest, NoInvest};
// the player best-responds with a pure action. Payoffs are linear in the mix
// weight, so the minimax is attained at an endpoint or at the crossing of the
// two action payoffs.
template <typename Scalar>
Scalar minimax_payoff(int player, State state, const Scalar& c) {
  auto u = [&](Action own, Action opp) -> Scalar {
    const ActionProfile prof =
        player == 0 ? ActionProfile{own, opp} : ActionProfile{opp, own};
    auto [u1, u2] = stage_payoff(prof, state, c);
    return player == 0 ? u1 : u2;
  };
  auto value_of = [&](Action own, const Scalar& q_invest) -> Scalar {
    // Opponent invests with probability q_invest.
    return q_invest * u(own, Action::Invest) +
           (Scalar(1) - q_invest) * u(own, Action::NoInvest);
  };
  auto best_reply = [&](const Scalar& q) {
    return std::max(value_of(Action::Invest, q), value_of(Action::NoInvest, q));
  };
  // Candidate minimizers: endpoints plus the crossing point of the two linear
  // best-reply segments, if it lies inside (0,1).
  Scalar best = std::min(best_reply(Scalar(0)), best_reply(Scalar(1)));
  const Scalar i0 = value_of(Action::Invest, Scalar(0));
  const Scalar i1 = value_of(Action::Invest, Scalar(1));
  const Scalar n0 = value_of(Action::NoInvest, Scalar(0));
  const Scalar n1 = value_of(Action::NoInvest, Scalar(1));
  const Scalar di = i1 - i0;
  const Scalar dn = n1 - n0;
  if (di != dn) {
    const Scalar q = (n0 - i0) / (di - dn);
    if (q > Scalar(0) && q < Scalar(1)) best = std::min(best, best_reply(q));
  }
  return best;
}

// Feasible and individually rational payoff set for one state: the convex
// hull of the four stage-payoff vectors clipped to both players' minimax
// half-planes.
struct PayoffPolygon {
  std::vector<std::pair<Rational, Rational>> vertices;  // CCW, deduplicated
  int dimension = -1;  // affine dimension: 0 point, 1 segment, 2 polygon
};

namespace detail {

using RPoint = std::pair<Rational, Rational>;

inline Rational cross(const RPoint& o, const RPoint& a, const RPoint& b) {
  return (a.first - o.first) * (b.second - o.second) -
         (a.second - o.second) * (b.first - o.first);
}

inline std::vector<RPoint> convex_hull(std::vector<RPoint> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;
  std::vector<RPoint> hull;
  auto build = [&](auto begin, auto end) {
    std::size_t base = hull.size();
    for (auto it = begin; it != end; ++it) {
      while (hull.size() >= base + 2 &&
             cross(hull[hull.size() - 2], hull.back(), *it) <= 0) {
        hull.pop_back();
      }
      hull.push_back(*it);
    }
    hull.pop_back();
  };
  build(pts.begin(), pts.end());
  build(pts.rbegin(), pts.rend());
  return hull;  // CCW
}

// Sutherland-Hodgman clip against the half-plane coord >= bound.
inline std::vector<RPoint> clip_at_least(const std::vector<RPoint>& poly,
                                         int coord, const Rational& bound) {
  auto val = [&](const RPoint& p) { return coord == 0 ? p.first : p.second; };
  std::vector<RPoint> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const RPoint& cur = poly[i];
    const RPoint& nxt = poly[(i + 1) % n];
    const bool cur_in = val(cur) >= bound;
    const bool nxt_in = val(nxt) >= bound;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) {
      const Rational t = (bound - val(cur)) / (val(nxt) - val(cur));
      out.emplace_back(cur.first + t * (nxt.first - cur.first),
                       cur.second + t * (nxt.second - cur.second));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return convex_hull(std::move(out));
}

}  // namespace detail

inline PayoffPolygon feasible_ir_set(State state, const Rational& c) {
  if (!(c > 0 && c < 1)) {
    throw param_error("feasible_ir_set: c must lie strictly in (0,1)");
  }
  std::vector<detail::RPoint> pts;
  for (Action a1 : {Action::Invest, Action::NoInvest}) {
    for (Action a2 : {Action::Invest, Action::NoInvest}) {
      auto [u1, u2] = stage_payoff<Rational>({a1, a2}, state, c);
      pts.emplace_back(u1, u2);
    }
  }
  auto hull = detail::convex_hull(std::move(pts));
  hull = detail::clip_at_least(hull, 0, minimax_payoff<Rational>(0, state, c));
  hull = detail::clip_at_least(hull, 1, minimax_payoff<Rational>(1, state, c));

  PayoffPolygon poly;
  poly.vertices = std::move(hull);
  if (poly.vertices.empty()) {
    poly.dimension = -1;
  } else if (poly.vertices.size() == 1) {
    poly.dimension = 0;
  } else if (poly.vertices.size() == 2) {
    poly.dimension = 1;
  } else {
    poly.dimension = 2;
  }
  return poly;
}

}  // namespace coinvest
