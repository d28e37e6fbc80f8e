#include <gtest/gtest.h>

#include <cmath>

#include "coinvest/signals.hpp"

namespace coinvest {
namespace {

SignalModel symmetric_73() {
  return SignalModel::make({"g", "b"}, {Rational(7, 10), Rational(3, 10)},
                           {Rational(3, 10), Rational(7, 10)});
}

TEST(ValidateModel, AcceptsTextbookSymmetricBinaryModel) {
  auto r = validate_model({"g", "b"}, {Rational(7, 10), Rational(3, 10)},
                          {Rational(3, 10), Rational(7, 10)});
  EXPECT_TRUE(r.valid);
  EXPECT_TRUE(r.issues.empty());
}

TEST(ValidateModel, RejectsZeroMassSymbol) {
  auto r = validate_model({"g", "b"}, {Rational(1), Rational(0)},
                          {Rational(3, 10), Rational(7, 10)});
  EXPECT_FALSE(r.valid);
  bool mentions_support = false;
  for (const auto& s : r.issues) {
    mentions_support |= s.find("full support") != std::string::npos;
  }
  EXPECT_TRUE(mentions_support);
}

TEST(ValidateModel, RejectsIdenticalRows) {
  auto r = validate_model({"g", "b"}, {Rational(1, 2), Rational(1, 2)},
                          {Rational(1, 2), Rational(1, 2)});
  EXPECT_FALSE(r.valid);
}

TEST(ValidateModel, ReportsRowThatDoesNotSumToOne) {
  auto r = validate_model({"g", "b"}, {Rational(7, 10), Rational(2, 10)},
                          {Rational(3, 10), Rational(7, 10)});
  EXPECT_FALSE(r.valid);
  bool names_fH = false;
  for (const auto& s : r.issues) names_fH |= s.find("fH") != std::string::npos;
  EXPECT_TRUE(names_fH);
}

TEST(SampleSignal, DeterministicGivenIdenticalStreams) {
  auto m = symmetric_73();
  RngStream a(42, 7, 0), b(42, 7, 0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_signal(m, State::High, a),
              sample_signal(m, State::High, b));
  }
}

TEST(SampleSignal, EmpiricalFrequencyWithinBinomialBand) {
  // Binomial oracle: the draw count of symbol 0 must land within 4 sigma of
  // n*p, including a near-degenerate model.
  struct Case {
    Rational p0;
    State state;
  };
  for (const auto& c :
       {Case{Rational(999999, 1000000), State::High},
        Case{Rational(7, 10), State::High}, Case{Rational(3, 10), State::Low}}) {
    SignalModel m = SignalModel::make(
        {"g", "b"},
        {c.state == State::High ? c.p0 : Rational(7, 10),
         c.state == State::High ? 1 - c.p0 : Rational(3, 10)},
        {c.state == State::Low ? c.p0 : Rational(3, 10),
         c.state == State::Low ? 1 - c.p0 : Rational(7, 10)});
    const int n = 1000000;
    RngStream rng(123, 0, 0);
    long count = 0;
    for (int i = 0; i < n; ++i) {
      count += sample_signal(m, c.state, rng) == 0 ? 1 : 0;
    }
    const double p = to_double(c.p0);
    const double sigma = std::sqrt(p * (1 - p) * n);
    EXPECT_NEAR(static_cast<double>(count), p * n, 4.0 * sigma + 1.0);
  }
}

TEST(SampleSignal, EmpiricalLlrSignTracksState) {
  // Law of large numbers: the summed LLR is positive under High and negative
  // under Low for a skewed model.
  SignalModel m = SignalModel::make({"g", "b"},
                                    {Rational(9, 10), Rational(1, 10)},
                                    {Rational(1, 10), Rational(9, 10)});
  for (State s : {State::High, State::Low}) {
    RngStream rng(9, 1, s == State::High ? 0 : 1);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
      sum += log_likelihood_ratio(m, sample_signal(m, s, rng));
    }
    if (s == State::High) {
      EXPECT_GT(sum, 0.0);
    } else {
      EXPECT_LT(sum, 0.0);
    }
  }
}

TEST(LogLikelihoodRatio, DirectRatioAndUninformativeSymbol) {
  auto m = symmetric_73();
  EXPECT_NEAR(log_likelihood_ratio(m, 0), std::log(7.0 / 3.0), 1e-15);
  SignalModel m3 = SignalModel::make(
      {"a", "m", "z"}, {Rational(1, 2), Rational(1, 4), Rational(1, 4)},
      {Rational(1, 4), Rational(1, 4), Rational(1, 2)});
  EXPECT_EQ(log_likelihood_ratio(m3, 1), 0.0);
  EXPECT_THROW(log_likelihood_ratio(m3, 3), param_error);
}

TEST(WorstCaseLlr, SymmetricBinaryModel) {
  auto [lo, hi] = worst_case_llr(symmetric_73());
  EXPECT_NEAR(lo, -std::log(7.0 / 3.0), 1e-15);
  EXPECT_NEAR(hi, std::log(7.0 / 3.0), 1e-15);
}

TEST(WorstCaseLlr, ThreeSymbolScan) {
  SignalModel m = SignalModel::make(
      {"a", "m", "z"}, {Rational(1, 2), Rational(3, 10), Rational(1, 5)},
      {Rational(1, 5), Rational(3, 10), Rational(1, 2)});
  auto [lo, hi] = worst_case_llr(m);
  EXPECT_NEAR(lo, -std::log(2.5), 1e-15);
  EXPECT_NEAR(hi, std::log(2.5), 1e-15);
}

TEST(WorstCaseLlr, ExtremesSitOnTheOnlyDifferingSymbols) {
  SignalModel m = SignalModel::make(
      {"a", "m", "z"}, {Rational(2, 5), Rational(3, 10), Rational(3, 10)},
      {Rational(1, 5), Rational(3, 10), Rational(1, 2)});
  auto [lo, hi] = worst_case_llr(m);
  EXPECT_NEAR(hi, std::log(2.0), 1e-15);
  EXPECT_NEAR(lo, std::log(3.0 / 5.0), 1e-15);
}

// Likelihood-ratio identities: sum_x fH(x) exp(-LLR(x)) = 1 and
// sum_x fL(x) exp(LLR(x)) = 1. Exact in rational arithmetic; 1e-12 in double.
TEST(LlrIdentities, HoldExactlyOnRationalModelsAndTightlyInDouble) {
  std::uint64_t seed = 1;
  auto next_small = [&](int lo, int hi) {
    seed = seed * 6364136223846793005ULL + 1442695040888963407ULL;
    return lo + static_cast<int>((seed >> 33) % (hi - lo + 1));
  };
  for (int rep = 0; rep < 50; ++rep) {
    const int n = next_small(2, 5);
    std::vector<Rational> fH, fL;
    std::vector<std::string> names;
    Rational sumH(0), sumL(0);
    for (int i = 0; i < n; ++i) {
      fH.emplace_back(next_small(1, 9), 1);
      fL.emplace_back(next_small(1, 9), 1);
      sumH += fH.back();
      sumL += fL.back();
      names.push_back(std::string(1, static_cast<char>('a' + i)));
    }
    for (int i = 0; i < n; ++i) {
      fH[i] /= sumH;
      fL[i] /= sumL;
    }
    if (fH == fL) continue;
    SignalModel m = SignalModel::make(names, fH, fL);

    Rational idH(0), idL(0);
    double dH = 0.0, dL = 0.0, eH = 0.0, eL = 0.0;
    for (int i = 0; i < n; ++i) {
      idH += m.fH[i] * (m.fL[i] / m.fH[i]);
      idL += m.fL[i] * (m.fH[i] / m.fL[i]);
      dH += m.fH_d[i] * std::exp(-m.llr[i]);
      dL += m.fL_d[i] * std::exp(m.llr[i]);
      eH += m.fH_d[i] * m.llr[i];
      eL += m.fL_d[i] * m.llr[i];
      // worst_case_llr bounds every per-symbol LLR.
      EXPECT_GE(m.llr[i], m.llr_min);
      EXPECT_LE(m.llr[i], m.llr_max);
    }
    EXPECT_EQ(idH, Rational(1));
    EXPECT_EQ(idL, Rational(1));
    EXPECT_NEAR(dH, 1.0, 1e-12);
    EXPECT_NEAR(dL, 1.0, 1e-12);
    // KL positivity: expected LLR is positive under High, negative under Low.
    EXPECT_GT(eH, 0.0);
    EXPECT_LT(eL, 0.0);
  }
}

}  // namespace
}  // namespace coinvest
