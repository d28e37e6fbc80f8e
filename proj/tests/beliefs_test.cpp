#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "coinvest/beliefs.hpp"
#include "coinvest/rng.hpp"

namespace coinvest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SignalModel symmetric_73() {
  return SignalModel::make({"g", "b"}, {Rational(7, 10), Rational(3, 10)},
                           {Rational(3, 10), Rational(7, 10)});
}

Rational posterior_from_sequence(const Rational& p0,
                                 const std::vector<Rational>& ratios) {
  Rational odds = p0 / (1 - p0);
  for (const auto& r : ratios) odds *= r;
  return odds / (1 + odds);
}

TEST(LlrDistribution, BinomialLatticeStaysCompact) {
  auto m = symmetric_73();
  MergePolicy mp;
  LlrDist d = nfold(signal_kernel(m, State::High), 50, mp);
  // 50 iid binary draws live on a 51-point lattice; merging must keep it so.
  EXPECT_LE(d.size(), 51u);
  EXPECT_NEAR(d.total_mass(), 1.0, 1e-12);
}

TEST(LlrDistribution, TruncationKeepsAndRenormalizes) {
  auto m = symmetric_73();
  MergePolicy mp;
  LlrDist d = nfold(signal_kernel(m, State::High), 3, mp);
  const double p_above = d.mass_at_least(0.0);
  LlrDist kept = d;
  const double kept_mass = kept.truncate_keep(0.0, true);
  EXPECT_NEAR(kept_mass, p_above, 1e-12);
  EXPECT_NEAR(kept.total_mass(), 1.0, 1e-12);
  for (double v : kept.llrs()) EXPECT_GE(v, 0.0);
}

TEST(UpdateOwnSignal, SymmetricBayesStep) {
  auto m = symmetric_73();
  BeliefState b = BeliefState::initial(logit(0.5), 0);
  b = update_own_signal(b, m, 0);
  EXPECT_NEAR(b.belief(), 0.7, 1e-12);
}

TEST(UpdateOwnSignal, UninformativeSymbolLeavesBeliefAlone) {
  SignalModel m3 = SignalModel::make(
      {"a", "m", "z"}, {Rational(1, 2), Rational(1, 4), Rational(1, 4)},
      {Rational(1, 4), Rational(1, 4), Rational(1, 2)});
  BeliefState b = BeliefState::initial(logit(0.37), 0);
  const double before = b.belief();
  b = update_own_signal(b, m3, 1);
  EXPECT_EQ(b.belief(), before);
}

TEST(UpdateOwnSignal, TwoGoodSymbolsMatchEnumeratedBayes) {
  auto m = symmetric_73();
  BeliefState b = BeliefState::initial(logit(0.5), 0);
  b = update_own_signal(b, m, 0);
  b = update_own_signal(b, m, 0);
  const Rational expected = posterior_from_sequence(
      Rational(1, 2), {Rational(7, 3), Rational(7, 3)});
  EXPECT_EQ(expected, Rational(49, 58));
  EXPECT_NEAR(b.belief(), to_double(expected), 1e-12);
}

// The prior-weighted mean of the posterior over all signal sequences equals
// the prior: exact martingale identity, enumerated for t <= 4.
TEST(BeliefMartingale, ExactOverEnumeratedSequences) {
  auto m = symmetric_73();
  const Rational p0(2, 5);
  for (int t = 1; t <= 4; ++t) {
    Rational mean(0);
    const int n_seq = 1 << t;
    for (int bits = 0; bits < n_seq; ++bits) {
      Rational massH = p0, massL = 1 - p0;
      for (int k = 0; k < t; ++k) {
        const int sym = (bits >> k) & 1;
        massH *= m.fH[sym];
        massL *= m.fL[sym];
      }
      mean += massH;  // posterior * total mass = massH
    }
    EXPECT_EQ(mean, p0) << "t=" << t;
  }
}

TEST(UpdateOpponentAction, CoolOffActionIsUninformative) {
  auto m = symmetric_73();
  auto kernels = SignalKernels::make(m);
  BeliefState b = BeliefState::initial(logit(0.5), 0);
  b = update_own_signal(b, m, 1);
  b = advance_opponent_signal(b, kernels);
  const double before = b.belief();
  b = update_opponent_action(b, Action::NoInvest, 0.0, Phase::CoolOff);
  EXPECT_EQ(b.belief(), before);
}

TEST(UpdateOpponentAction, AlwaysInvestingOpponentIsUninformative) {
  auto m = symmetric_73();
  auto kernels = SignalKernels::make(m);
  BeliefState b = BeliefState::initial(logit(0.5), 0);
  b = advance_opponent_signal(b, kernels);
  const double before = b.belief();
  b = update_opponent_action(b, Action::Invest, -kInf, Phase::Investment);
  EXPECT_EQ(b.belief(), before);
}

TEST(UpdateOpponentAction, OneSignalThresholdEnumeration) {
  // Opponent invests iff their one-signal posterior clears 1/2, so observing
  // an investment is exactly a good-signal update: 0.5 -> 0.7.
  auto m = symmetric_73();
  auto kernels = SignalKernels::make(m);
  BeliefState b = BeliefState::initial(logit(0.5), 0);
  b = advance_opponent_signal(b, kernels);
  b = update_opponent_action(b, Action::Invest, logit(0.5), Phase::Investment);
  EXPECT_NEAR(b.belief(), 0.7, 1e-12);
}

// Board-filter updates against a brute-force joint-Bayes oracle over
// (x_i^t, x_j^t) pairs, t <= 3. The watcher never invests (so their actions
// are informationless); the watched player follows a fixed one-sided
// threshold rule on their own-signal posterior.
TEST(UpdateOpponentAction, FilterMatchesJointBayesEnumeration) {
  auto m = symmetric_73();
  auto kernels = SignalKernels::make(m);
  const Rational p0(1, 2);
  const double pi_opp = 0.6;  // opponent threshold in belief space

  for (int t = 1; t <= 3; ++t) {
    for (int opp_bits = 0; opp_bits < (1 << t); ++opp_bits) {
      // Opponent's realized actions under the threshold rule.
      std::vector<Action> opp_actions;
      {
        Rational odds = p0 / (1 - p0);
        for (int k = 0; k < t; ++k) {
          const int sym = (opp_bits >> k) & 1;
          odds *= m.fH[sym] / m.fL[sym];
          const Rational belief = odds / (1 + odds);
          opp_actions.push_back(belief >= Rational(3, 5) ? Action::Invest
                                                         : Action::NoInvest);
        }
      }
      for (int own_bits = 0; own_bits < (1 << t); ++own_bits) {
        // Filter route.
        BeliefState b = BeliefState::initial(logit(0.5), 0);
        for (int k = 0; k < t; ++k) {
          b = update_own_signal(b, m, (own_bits >> k) & 1);
          b = advance_opponent_signal(b, kernels);
          b = update_opponent_action(b, opp_actions[k], logit(pi_opp),
                                     Phase::Investment);
        }
        // Joint-Bayes oracle: sum over the opponent's signal sequences that
        // reproduce the observed action path.
        Rational massH(0), massL(0);
        for (int xj = 0; xj < (1 << t); ++xj) {
          Rational odds = p0 / (1 - p0);
          bool consistent = true;
          for (int k = 0; k < t && consistent; ++k) {
            const int sym = (xj >> k) & 1;
            odds *= m.fH[sym] / m.fL[sym];
            const Rational belief = odds / (1 + odds);
            const Action a = belief >= Rational(3, 5) ? Action::Invest
                                                      : Action::NoInvest;
            consistent = a == opp_actions[k];
          }
          if (!consistent) continue;
          Rational fh(1), fl(1);
          for (int k = 0; k < t; ++k) {
            const int sym = (xj >> k) & 1;
            fh *= m.fH[sym];
            fl *= m.fL[sym];
          }
          massH += fh;
          massL += fl;
        }
        Rational own_fh(1), own_fl(1);
        for (int k = 0; k < t; ++k) {
          const int sym = (own_bits >> k) & 1;
          own_fh *= m.fH[sym];
          own_fl *= m.fL[sym];
        }
        const Rational num = p0 * own_fh * massH;
        const Rational den = num + (1 - p0) * own_fl * massL;
        const Rational expected = num / den;
        EXPECT_NEAR(b.belief(), to_double(expected), 1e-10)
            << "t=" << t << " opp=" << opp_bits << " own=" << own_bits;
      }
    }
  }
}

TEST(ExpectedPosterior, ZeroStepsReturnsStart) {
  auto m = symmetric_73();
  EXPECT_EQ(expected_posterior_after_n(0.42, m, 0, State::High), 0.42);
}

TEST(ExpectedPosterior, OneStepEnumeration) {
  auto m = symmetric_73();
  // 0.7*0.7 + 0.3*0.3 under High from an even prior.
  EXPECT_NEAR(expected_posterior_after_n(0.5, m, 1, State::High), 0.58, 1e-12);
}

TEST(ExpectedPosterior, MonotoneInHorizonUnderHigh) {
  auto m = symmetric_73();
  double prev = 0.0;
  for (int n : {1, 2, 4, 7, 10}) {
    const double e = expected_posterior_after_n(0.5, m, n, State::High);
    EXPECT_GE(e, prev - 1e-12);
    prev = e;
  }
  EXPECT_GE(prev, expected_posterior_after_n(0.5, m, 1, State::High));
}

TEST(ExpectedPosterior, DownRoundingNeverOverstates) {
  auto m = symmetric_73();
  for (int n : {1, 5, 20}) {
    const double lo =
        expected_posterior_after_n(0.3, m, n, State::High, BeliefRounding::Down);
    const double mid = expected_posterior_after_n(0.3, m, n, State::High);
    EXPECT_LE(lo, mid);
    EXPECT_NEAR(lo, mid, 1e-6);
  }
}

TEST(ConditionedPosterior, TrivialRefinementGivesPriorExactly) {
  auto space = FiniteProbSpace::make(
      {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)});
  auto part = Partition::make({0, 0, 1, 1});
  auto report = conditioned_posterior_mean(space, part, part,
                                           {true, false, true, false});
  EXPECT_TRUE(report.ok);
  for (const auto& cell : report.cells) {
    EXPECT_EQ(cell.lhs, cell.p);
    EXPECT_EQ(cell.rhs, cell.p);
  }
}

TEST(ConditionedPosterior, FourAtomFullSplitExactIdentity) {
  auto space = FiniteProbSpace::make(
      {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)});
  auto coarse = Partition::make({0, 0, 0, 0});
  auto fine = Partition::make({0, 1, 2, 3});
  auto report =
      conditioned_posterior_mean(space, coarse, fine, {true, true, false, false});
  ASSERT_EQ(report.cells.size(), 1u);
  EXPECT_TRUE(report.ok);
  EXPECT_EQ(report.cells[0].p, Rational(1, 2));
  EXPECT_EQ(report.cells[0].lhs, Rational(1));
  EXPECT_EQ(report.cells[0].rhs, Rational(1));
}

TEST(ConditionedPosterior, RejectsZeroProbabilityEvent) {
  auto space = FiniteProbSpace::make({Rational(1, 2), Rational(1, 2)});
  auto part = Partition::make({0, 1});
  EXPECT_THROW(
      conditioned_posterior_mean(space, part, part, {false, false}),
      param_error);
}

// Randomized spaces: identity and domination never fail. The acceptance suite
// runs the full 1,000-space version; this is the fast unit slice.
TEST(ConditionedPosterior, RandomRationalSpaces) {
  RngStream rng(2024, 0, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 9);
    std::vector<Rational> w;
    Rational sum(0);
    for (int a = 0; a < n; ++a) {
      w.emplace_back(1 + static_cast<long>(rng.next_u64() % 12), 1);
      sum += w.back();
    }
    for (auto& x : w) x /= sum;
    std::vector<int> coarse(n), fine(n);
    int next_fine = 0;
    const int n_coarse = 1 + static_cast<int>(rng.next_u64() % 3);
    std::vector<std::vector<int>> members(n_coarse);
    for (int a = 0; a < n; ++a) {
      coarse[a] = a < n_coarse ? a : static_cast<int>(rng.next_u64() % n_coarse);
      members[coarse[a]].push_back(a);
    }
    // Split each coarse cell into one or two fine cells.
    for (int cellIdx = 0; cellIdx < n_coarse; ++cellIdx) {
      const auto& cell = members[cellIdx];
      if (cell.empty()) continue;
      const int parts = cell.size() == 1 ? 1 : 1 + static_cast<int>(rng.next_u64() % 2);
      const int first = next_fine;
      next_fine += parts;
      for (std::size_t idx = 0; idx < cell.size(); ++idx) {
        fine[cell[idx]] =
            first + (parts == 1 ? 0 : static_cast<int>(rng.next_u64() % parts));
      }
    }
    // Cell ids must be contiguous; remap.
    std::vector<int> remap(next_fine, -1);
    int used = 0;
    for (int a = 0; a < n; ++a) {
      if (remap[fine[a]] == -1) remap[fine[a]] = used++;
      fine[a] = remap[fine[a]];
    }
    std::vector<bool> event(n);
    bool any = false;
    for (int a = 0; a < n; ++a) {
      event[a] = rng.next_u64() % 2 == 0;
      any |= event[a];
    }
    if (!any) event[0] = true;

    auto report = conditioned_posterior_mean(
        FiniteProbSpace::make(w), Partition::make(coarse),
        Partition::make(fine), event);
    EXPECT_TRUE(report.ok) << "rep " << rep;
  }
}

TEST(TailBound, DegenerateAtOne) {
  auto r = markov_tail_bound_check({{Rational(1), Rational(1)}}, Rational(1, 3));
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.tail_prob, Rational(1));
}

TEST(TailBound, TwoPointDistributionAtThePreconditionBoundary) {
  // Mass 0.99 at 1 and 0.01 at 0 with eps = 0.1: mean is exactly 1 - eps^2,
  // and P[X > 0.9] = 0.99 >= 0.9.
  auto r = markov_tail_bound_check(
      {{Rational(1), Rational(99, 100)}, {Rational(0), Rational(1, 100)}},
      Rational(1, 10));
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.tail_prob, Rational(99, 100));
}

TEST(TailBound, UnmetPreconditionIsNotApplicableNotFailed) {
  auto r = markov_tail_bound_check(
      {{Rational(1, 2), Rational(1)}}, Rational(1, 10));
  EXPECT_FALSE(r.applicable);
  EXPECT_FALSE(r.holds);
}

TEST(TailBound, RandomDistributionsMeetingThePrecondition) {
  RngStream rng(7, 7, 7);
  int tested = 0;
  for (int rep = 0; rep < 400 && tested < 100; ++rep) {
    const Rational eps(1 + static_cast<long>(rng.next_u64() % 80), 100);
    const int n = 2 + static_cast<int>(rng.next_u64() % 4);
    std::vector<std::pair<Rational, Rational>> dist;
    Rational wsum(0);
    for (int a = 0; a < n; ++a) {
      Rational v(static_cast<long>(rng.next_u64() % 101), 100);
      Rational w(1 + static_cast<long>(rng.next_u64() % 9), 1);
      dist.emplace_back(v, w);
      wsum += w;
    }
    // Pile extra mass at 1 until the mean precondition holds.
    Rational mean(0);
    for (auto& [v, w] : dist) mean += v * (w / wsum);
    if (mean < 1 - eps * eps) {
      // Solve for extra weight at value 1.
      // (mean*wsum + x) / (wsum + x) >= 1 - eps^2
      const Rational target = 1 - eps * eps;
      if (target < 1) {
        const Rational x = (target * wsum - mean * wsum) / (1 - target);
        dist.emplace_back(Rational(1), x + 1);
      }
    }
    auto r = markov_tail_bound_check(dist, eps);
    if (!r.applicable) continue;
    ++tested;
    EXPECT_TRUE(r.holds) << "rep " << rep;
  }
  EXPECT_GE(tested, 50);
}

}  // namespace
}  // namespace coinvest
