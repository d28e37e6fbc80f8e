#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "coinvest/common.hpp"
#include "coinvest/game.hpp"
#include "coinvest/rational.hpp"
#include "coinvest/rng.hpp"

namespace coinvest {

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> issues;

  void fail(std::string msg) {
    valid = false;
    issues.push_back(std::move(msg));
  }
};

// Finite-alphabet private-signal model: one distribution per state, full
// support so no single signal reveals the state, and fH != fL so signals are
// informative. Symbols travel as alphabet indices on hot paths.
struct SignalModel {
  std::vector<std::string> alphabet;
  std::vector<Rational> fH, fL;

  // double mirrors and per-symbol log-likelihood ratios log(fH/fL)
  std::vector<double> fH_d, fL_d, llr;
  std::vector<double> cdfH, cdfL;
  double llr_min = 0.0, llr_max = 0.0;

  int size() const { return static_cast<int>(alphabet.size()); }

  const std::vector<double>& f_d(State s) const {
    return s == State::High ? fH_d : fL_d;
  }
  const std::vector<Rational>& f(State s) const {
    return s == State::High ? fH : fL;
  }

  static SignalModel make(std::vector<std::string> alphabet,
                          std::vector<Rational> fH, std::vector<Rational> fL);
};

// Checks the three model invariants; reports every violation instead of
// stopping at the first.
inline ValidationReport validate_model(const std::vector<std::string>& alphabet,
                                       const std::vector<Rational>& fH,
                                       const std::vector<Rational>& fL,
                                       const Rational& tol = Rational(0)) {
  ValidationReport report;
  if (alphabet.empty()) report.fail("alphabet is empty");
  if (fH.size() != alphabet.size() || fL.size() != alphabet.size()) {
    report.fail("probability rows must match the alphabet length");
    return report;
  }
  auto check_row = [&](const std::vector<Rational>& f, const char* name) {
    Rational sum(0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      sum += f[i];
      if (f[i] <= 0) {
        report.fail(std::string("full support violated: ") + name + "(" +
                    alphabet[i] + ") <= 0");
      }
    }
    Rational err = sum - 1;
    if (err < 0) err = -err;
    if (err > tol) {
      report.fail(std::string(name) + " does not sum to 1 (sum = " +
                  rational_to_string(sum) + ")");
    }
  };
  check_row(fH, "fH");
  check_row(fL, "fL");
  if (fH == fL) report.fail("fH and fL are identical; signals carry no information");
  return report;
}

inline SignalModel SignalModel::make(std::vector<std::string> alphabet,
                                     std::vector<Rational> fH,
                                     std::vector<Rational> fL) {
  auto report = validate_model(alphabet, fH, fL);
  if (!report.valid) {
    std::string msg = "invalid signal model:";
    for (const auto& issue : report.issues) msg += " " + issue + ";";
    throw param_error(msg);
  }
  SignalModel m;
  m.alphabet = std::move(alphabet);
  m.fH = std::move(fH);
  m.fL = std::move(fL);
  const int n = m.size();
  m.fH_d.resize(n);
  m.fL_d.resize(n);
  m.llr.resize(n);
  m.cdfH.resize(n);
  m.cdfL.resize(n);
  double ch = 0.0, cl = 0.0;
  for (int i = 0; i < n; ++i) {
    m.fH_d[i] = to_double(m.fH[i]);
    m.fL_d[i] = to_double(m.fL[i]);
    m.llr[i] = std::log(to_double(m.fH[i] / m.fL[i]));
    ch += m.fH_d[i];
    cl += m.fL_d[i];
    m.cdfH[i] = ch;
    m.cdfL[i] = cl;
  }
  m.cdfH.back() = 1.0;
  m.cdfL.back() = 1.0;
  m.llr_min = *std::min_element(m.llr.begin(), m.llr.end());
  m.llr_max = *std::max_element(m.llr.begin(), m.llr.end());
  return m;
}

// One private draw. Deterministic given the stream state.
inline int sample_signal(const SignalModel& m, State state, RngStream& rng) {
  const std::vector<double>& cdf = state == State::High ? m.cdfH : m.cdfL;
  const double u = rng.next_double();
  for (int i = 0; i < m.size(); ++i) {
    if (u < cdf[i]) return i;
  }
  return m.size() - 1;
}

inline double log_likelihood_ratio(const SignalModel& m, int symbol) {
  if (symbol < 0 || symbol >= m.size()) {
    throw param_error("log_likelihood_ratio: unknown symbol index");
  }
  return m.llr[symbol];
}

inline Rational likelihood_ratio_exact(const SignalModel& m, int symbol) {
  if (symbol < 0 || symbol >= m.size()) {
    throw param_error("likelihood_ratio_exact: unknown symbol index");
  }
  return m.fH[symbol] / m.fL[symbol];
}

// Extreme per-symbol LLRs; these bound any single-signal update and drive the
// worst-case belief floors in the cool-off derivation.
inline std::pair<double, double> worst_case_llr(const SignalModel& m) {
  return {m.llr_min, m.llr_max};
}

// An ordered private-signal record for one player.
struct SignalSequence {
  std::vector<int> symbols;
  int owner = 0;

  int length() const { return static_cast<int>(symbols.size()); }

  static SignalSequence make(const SignalModel& m, std::vector<int> symbols,
                             int owner) {
    for (int s : symbols) {
      if (s < 0 || s >= m.size()) {
        throw param_error("SignalSequence: symbol index out of range");
      }
    }
    return {std::move(symbols), owner};
  }
};

}  // namespace coinvest
