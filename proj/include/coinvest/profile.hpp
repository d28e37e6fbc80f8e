#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coinvest/beliefs.hpp"
#include "coinvest/common.hpp"
#include "coinvest/cooloff.hpp"
#include "coinvest/game.hpp"
#include "coinvest/llr_dist.hpp"
#include "coinvest/policy.hpp"
#include "coinvest/signals.hpp"

namespace coinvest {

inline int profile_code(ActionProfile p) {
  return (p.a1 == Action::Invest ? 0 : 2) + (p.a2 == Action::Invest ? 0 : 1);
}

inline ActionProfile profile_from_code(int code) {
  return {code < 2 ? Action::Invest : Action::NoInvest,
          code % 2 == 0 ? Action::Invest : Action::NoInvest};
}

inline const char* profile_token(int code) {
  static const char* tokens[4] = {"II", "IN", "NI", "NN"};
  return tokens[code];
}

// One public investment node: the state of public information at an acting
// period whose history is classified Investment. Immutable once published.
struct PublicNode {
  int depth = 0;    // investment periods before this one
  int period = 0;   // acting period t; the history a^{t-1} is Investment
  std::string key;  // investment-outcome tokens; empty past the key limit
  bool keyed = true;

  // Rows include signals through `period` (decision time) and action
  // truncations through period-1.
  PublicBoard board;

  std::array<double, 2> threshold_log_odds{0.0, 0.0};
  std::array<double, 2> cutoff{0.0, 0.0};  // invest iff own LLR >= cutoff
  // P(player invests | state), given consistency with the public history.
  double invest_prob[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

  double action_evidence(int player) const {
    return board.action_evidence[player];
  }
  double invest_p(int player, State s) const {
    return invest_prob[player][s == State::High ? 0 : 1];
  }

  // Child links: -1 unbuilt, -2 beyond the period cap, else node id. Nodes
  // live behind stable pointers, so links can be lock-free.
  mutable std::array<std::atomic<std::int32_t>, 4> child{-1, -1, -1, -1};
};

// A pair of threshold policies bound to a game, signal model and cool-off
// scheme, with every reachable investment node's public information computed
// once and cached. Both the best-response DP and the simulator read nodes
// from here; node contents are a pure function of the node's path, so the
// cache is deterministic no matter which worker fills it.
class ProfileContext {
 public:
  struct Options {
    int max_period = 1 << 20;  // nodes are not built past this acting period
    int key_depth_limit = 512; // deeper nodes fall back to default thresholds
    MergePolicy merge;
  };

  ProfileContext(GameParams g, SignalModel m, CoolOffScheme scheme,
                 ThresholdPolicy p1, ThresholdPolicy p2, Options opt = {})
      : params_(std::move(g)),
        model_(std::move(m)),
        scheme_(std::move(scheme)),
        policies_{std::move(p1), std::move(p2)},
        opt_(opt),
        kernels_(SignalKernels::make(model_, opt.merge)) {}

  const GameParams& params() const { return params_; }
  const SignalModel& model() const { return model_; }
  const CoolOffScheme& scheme() const { return scheme_; }
  const ThresholdPolicy& policy(int player) const { return policies_[player]; }
  const SignalKernels& kernels() const { return kernels_; }
  const Options& options() const { return opt_; }

  int first_investment_period() const {
    return scheme_.first_investment_period();
  }

  // Acting period of the investment node reached from `node` by `profile`;
  // may exceed max_period.
  int next_period(const PublicNode& node, ActionProfile profile) const {
    if (profile.both_invest()) return node.period + 1;
    return scheme_.next_investment_period_after_break(node.period);
  }

  // Root node (the opening investment node), or -1 when it lies past
  // max_period.
  std::int32_t root() {
    std::call_once(root_once_, [this] {
      const int t = first_investment_period();
      if (t > opt_.max_period) {
        root_id_ = -1;
        return;
      }
      PublicBoard board = PublicBoard::initial();
      board.advance_signals(kernels_, t - 1, opt_.merge);
      // One more period of signals brings the rows to decision time.
      board.advance_signals(kernels_, opt_.merge);
      root_id_ = publish(0, t, "", true, std::move(board));
    });
    return root_id_;
  }

  const PublicNode& node(std::int32_t id) const {
    const PublicNode* p = nullptr;
    {
      std::lock_guard<std::mutex> lock(mu_);
      p = nodes_.at(static_cast<std::size_t>(id)).get();
    }
    return *p;  // pointees are stable and immutable once published
  }

  // Child node id, building it if needed; -1 when it lies past max_period.
  std::int32_t child(std::int32_t id, ActionProfile profile) {
    const PublicNode& parent = node(id);
    const int code = profile_code(profile);
    std::int32_t existing = parent.child[code].load(std::memory_order_acquire);
    if (existing != -1) return existing == -2 ? -1 : existing;

    const int t_next = next_period(parent, profile);
    if (t_next > opt_.max_period) {
      parent.child[code].store(-2, std::memory_order_release);
      return -1;
    }
    // Build outside the lock from the parent's immutable board.
    PublicBoard board = parent.board;
    board.apply_action(0, profile.a1, parent.cutoff[0]);
    board.apply_action(1, profile.a2, parent.cutoff[1]);
    board.advance_signals(kernels_, t_next - parent.period, opt_.merge);
    const bool keyed = parent.keyed && parent.depth + 1 <= opt_.key_depth_limit;
    std::string key;
    if (keyed) {
      key = parent.key.empty() ? profile_token(code)
                               : parent.key + "." + profile_token(code);
    }
    const std::int32_t id_new = publish(parent.depth + 1, t_next,
                                        std::move(key), keyed, std::move(board));
    std::int32_t expected = -1;
    if (parent.child[code].compare_exchange_strong(expected, id_new,
                                                   std::memory_order_acq_rel)) {
      return id_new;
    }
    // Another worker won the race; theirs is identical by construction.
    return expected == -2 ? -1 : expected;
  }

  // Follows investment-outcome tokens from the root.
  std::int32_t node_for_tokens(std::span<const ActionProfile> outcomes) {
    std::int32_t id = root();
    for (const auto& p : outcomes) {
      if (id < 0) return -1;
      id = child(id, p);
    }
    return id;
  }

  // Maps a full action history (ending at an investment history a^{t-1}) to
  // its node, checking scheme consistency: cool-off periods must show (N,N).
  std::int32_t node_for_history(std::span<const ActionProfile> history) {
    std::vector<ActionProfile> outcomes;
    int next_inv = first_investment_period();
    for (int t = 1; t <= static_cast<int>(history.size()); ++t) {
      const ActionProfile& p = history[t - 1];
      if (t == next_inv) {
        outcomes.push_back(p);
        next_inv = p.both_invest()
                       ? t + 1
                       : scheme_.next_investment_period_after_break(t);
      } else if (!(p == kBothNoInvest)) {
        throw param_error(
            "history is inconsistent with the cool-off scheme: investment "
            "during a cool-off period");
      }
    }
    if (static_cast<int>(history.size()) + 1 != next_inv) {
      throw param_error(
          "history does not end at an investment node acting period");
    }
    return node_for_tokens(outcomes);
  }

  std::size_t node_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return nodes_.size();
  }

 private:
  std::int32_t publish(int depth, int period, std::string key, bool keyed,
                       PublicBoard board) {
    auto staged = std::make_unique<PublicNode>();
    staged->depth = depth;
    staged->period = period;
    staged->key = std::move(key);
    staged->keyed = keyed;
    staged->board = std::move(board);
    for (int i = 0; i < 2; ++i) {
      staged->threshold_log_odds[i] =
          keyed ? policies_[i].threshold_log_odds(staged->key)
                : policies_[i].default_threshold;
      staged->cutoff[i] = staged->threshold_log_odds[i] -
                          params_.prior_log_odds -
                          staged->board.action_evidence[1 - i];
      for (State s : {State::High, State::Low}) {
        staged->invest_prob[i][s == State::High ? 0 : 1] =
            staged->board.of(i, s).mass_at_least(staged->cutoff[i]);
      }
    }
    std::lock_guard<std::mutex> lock(mu_);
    nodes_.push_back(std::move(staged));
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  GameParams params_;
  SignalModel model_;
  CoolOffScheme scheme_;
  std::array<ThresholdPolicy, 2> policies_;
  Options opt_;
  SignalKernels kernels_;

  mutable std::mutex mu_;
  std::vector<std::unique_ptr<PublicNode>> nodes_;
  std::once_flag root_once_;
  std::int32_t root_id_ = -1;
};

// The conditional probability that `player` invests at the investment
// history `history`, given the state: the own-consistency ratio computed by
// the filter forward recursion. Exact X^t enumeration of the same quantity
// lives in enumeration.hpp; the two agree to tight tolerance on histories
// where both run.
inline double conditional_invest_prob(ProfileContext& ctx,
                                      std::span<const ActionProfile> history,
                                      int player, State state) {
  // Consistency of the player's own actions: every prefix action must have
  // positive probability under the policy at its node.
  std::vector<ActionProfile> outcomes;
  {
    int next_inv = ctx.first_investment_period();
    for (int t = 1; t <= static_cast<int>(history.size()); ++t) {
      const ActionProfile& p = history[t - 1];
      if (t == next_inv) {
        outcomes.push_back(p);
        next_inv = p.both_invest()
                       ? t + 1
                       : ctx.scheme().next_investment_period_after_break(t);
      } else if (!(p == kBothNoInvest)) {
        throw param_error("conditional_invest_prob: investment during cool-off");
      }
    }
    if (static_cast<int>(history.size()) + 1 != next_inv) {
      throw param_error(
          "conditional_invest_prob: history must end at an investment node");
    }
  }
  std::int32_t id = ctx.root();
  for (const auto& p : outcomes) {
    if (id < 0) throw param_error("conditional_invest_prob: beyond max period");
    const PublicNode& n = ctx.node(id);
    const Action own = p.by(player);
    const double pH = own == Action::Invest
                          ? n.invest_p(player, State::High)
                          : 1.0 - n.invest_p(player, State::High);
    const double pL = own == Action::Invest
                          ? n.invest_p(player, State::Low)
                          : 1.0 - n.invest_p(player, State::Low);
    if (pH <= 0.0 && pL <= 0.0) {
      throw param_error(
          "conditional_invest_prob: history inconsistent with the policy");
    }
    id = ctx.child(id, p);
  }
  if (id < 0) throw param_error("conditional_invest_prob: beyond max period");
  return ctx.node(id).invest_p(player, state);
}

// Checks membership in the eps-cool-off strategy class: at every reachable
// investment history up to `depth` investment periods that is consistent
// with the player's own policy, the conditional investment probability under
// High must be at least 1 - eps.
struct MembershipViolation {
  std::string key;
  double prob = 0.0;
};

struct MembershipReport {
  bool ok = true;
  int nodes_checked = 0;
  std::vector<MembershipViolation> violations;
};

inline MembershipReport verify_class_membership(ProfileContext& ctx,
                                                int player, int depth,
                                                double eps) {
  MembershipReport report;
  std::vector<std::int32_t> frontier;
  if (ctx.root() >= 0) frontier.push_back(ctx.root());
  while (!frontier.empty()) {
    std::vector<std::int32_t> next;
    for (std::int32_t id : frontier) {
      const PublicNode& n = ctx.node(id);
      ++report.nodes_checked;
      const double p = n.invest_p(player, State::High);
      if (p < 1.0 - eps) {
        report.ok = false;
        report.violations.push_back({n.keyed ? n.key : "(deep)", p});
      }
      if (n.depth >= depth) continue;
      for (int code = 0; code < 4; ++code) {
        const ActionProfile prof = profile_from_code(code);
        const Action own = prof.by(player);
        const double pH = own == Action::Invest
                              ? n.invest_p(player, State::High)
                              : 1.0 - n.invest_p(player, State::High);
        const double pL = own == Action::Invest
                              ? n.invest_p(player, State::Low)
                              : 1.0 - n.invest_p(player, State::Low);
        if (pH <= 0.0 && pL <= 0.0) continue;  // inconsistent with own policy
        const std::int32_t c = ctx.child(id, prof);
        if (c >= 0) next.push_back(c);
      }
    }
    frontier = std::move(next);
  }
  return report;
}

}  // namespace coinvest
