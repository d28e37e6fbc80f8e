#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "coinvest/common.hpp"
#include "coinvest/game.hpp"
#include "coinvest/signals.hpp"

namespace coinvest {

// Controls how LLR-distribution supports are kept compact. Exact supports are
// kept until max_atoms, then mass-preservingly rebinned onto a uniform grid.
// Rounding direction matters when a computation feeds a one-sided bound:
// Down only ever lowers LLR values (and hence beliefs), Up only raises them.
struct MergePolicy {
  double merge_eps = 1e-12;
  double trim_tail = 1e-14;
  std::size_t max_atoms = 20000;
  double grid_step = 1e-3;
  enum class Rounding { Nearest, Down, Up } rounding = Rounding::Nearest;
};

// A finite distribution over cumulative log-likelihood-ratio values, sorted
// by value. This is the common currency of the belief filter: each player's
// private evidence, conditioned on a state and on consistency with the public
// action history, is one of these.
class LlrDist {
 public:
  static LlrDist point_mass(double llr = 0.0) {
    LlrDist d;
    d.llr_ = {llr};
    d.mass_ = {1.0};
    return d;
  }

  static LlrDist from_atoms(std::vector<std::pair<double, double>> atoms,
                            const MergePolicy& mp = {}) {
    LlrDist d;
    d.assign_compacted(std::move(atoms), mp);
    return d;
  }

  std::size_t size() const { return llr_.size(); }
  const std::vector<double>& llrs() const { return llr_; }
  const std::vector<double>& masses() const { return mass_; }

  double total_mass() const {
    double s = 0.0;
    for (double m : mass_) s += m;
    return s;
  }

  // P[value >= cutoff].
  double mass_at_least(double cutoff) const {
    auto it = std::lower_bound(llr_.begin(), llr_.end(), cutoff);
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(it - llr_.begin());
         i < mass_.size(); ++i) {
      s += mass_[i];
    }
    return s;
  }

  // Keeps either {value >= cutoff} or its complement and renormalizes.
  // Returns the kept mass before renormalization; on zero kept mass the
  // distribution is left untouched (the caller owns off-path handling).
  double truncate_keep(double cutoff, bool keep_at_least) {
    auto it = std::lower_bound(llr_.begin(), llr_.end(), cutoff);
    const std::size_t split = static_cast<std::size_t>(it - llr_.begin());
    double kept = 0.0;
    if (keep_at_least) {
      for (std::size_t i = split; i < mass_.size(); ++i) kept += mass_[i];
      if (kept <= 0.0) return 0.0;
      llr_.erase(llr_.begin(), llr_.begin() + split);
      mass_.erase(mass_.begin(), mass_.begin() + split);
    } else {
      for (std::size_t i = 0; i < split; ++i) kept += mass_[i];
      if (kept <= 0.0) return 0.0;
      llr_.resize(split);
      mass_.resize(split);
    }
    const double inv = 1.0 / kept;
    for (double& m : mass_) m *= inv;
    return kept;
  }

  // Distribution of the sum of an independent draw from `kernel` and this.
  void convolve(const LlrDist& kernel, const MergePolicy& mp) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(llr_.size() * kernel.size());
    for (std::size_t i = 0; i < llr_.size(); ++i) {
      for (std::size_t j = 0; j < kernel.size(); ++j) {
        atoms.emplace_back(llr_[i] + kernel.llr_[j],
                           mass_[i] * kernel.mass_[j]);
      }
    }
    assign_compacted(std::move(atoms), mp);
  }

  // sum_k mass_k * logistic(offset + llr_k)
  double expect_logistic(double offset) const {
    double s = 0.0;
    for (std::size_t i = 0; i < llr_.size(); ++i) {
      s += mass_[i] * logistic(offset + llr_[i]);
    }
    return s;
  }

  void compact(const MergePolicy& mp) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(llr_.size());
    for (std::size_t i = 0; i < llr_.size(); ++i) {
      atoms.emplace_back(llr_[i], mass_[i]);
    }
    assign_compacted(std::move(atoms), mp);
  }

 private:
  void assign_compacted(std::vector<std::pair<double, double>> atoms,
                        const MergePolicy& mp) {
    std::sort(atoms.begin(), atoms.end());
    llr_.clear();
    mass_.clear();
    // Merge runs of near-identical values. Binary models then keep an exact
    // lattice support even though floating addition is not associative.
    std::size_t i = 0;
    while (i < atoms.size()) {
      std::size_t j = i + 1;
      double m = atoms[i].second;
      double wsum = atoms[i].first * atoms[i].second;
      while (j < atoms.size() && atoms[j].first - atoms[i].first <= mp.merge_eps) {
        m += atoms[j].second;
        wsum += atoms[j].first * atoms[j].second;
        ++j;
      }
      double v = 0.0;
      switch (mp.rounding) {
        case MergePolicy::Rounding::Down:
          v = atoms[i].first;
          break;
        case MergePolicy::Rounding::Up:
          v = atoms[j - 1].first;
          break;
        case MergePolicy::Rounding::Nearest:
          v = m > 0.0 ? wsum / m : atoms[i].first;
          break;
      }
      llr_.push_back(v);
      mass_.push_back(m);
      i = j;
    }
    trim(mp);
    if (llr_.size() > mp.max_atoms) rebin(mp);
  }

  // Folds vanishing tail mass into the nearest kept atom. In Down mode the
  // left tail stays put so mass never moves upward.
  void trim(const MergePolicy& mp) {
    if (llr_.size() <= 2 || mp.trim_tail <= 0.0) return;
    const double total = total_mass();
    const double budget = total * mp.trim_tail;
    std::size_t lo = 0, hi = llr_.size() - 1;
    if (mp.rounding != MergePolicy::Rounding::Down) {
      double acc = 0.0;
      while (lo + 1 < hi && acc + mass_[lo] <= budget) acc += mass_[lo++];
      if (lo > 0) mass_[lo] += acc;
    }
    if (mp.rounding != MergePolicy::Rounding::Up) {
      double acc = 0.0;
      while (hi > lo + 1 && acc + mass_[hi] <= budget) acc += mass_[hi--];
      if (hi + 1 < llr_.size()) mass_[hi] += acc;
    }
    if (lo > 0 || hi + 1 < llr_.size()) {
      llr_ = std::vector<double>(llr_.begin() + lo, llr_.begin() + hi + 1);
      mass_ = std::vector<double>(mass_.begin() + lo, mass_.begin() + hi + 1);
    }
  }

  void rebin(const MergePolicy& mp) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(llr_.size());
    for (std::size_t i = 0; i < llr_.size(); ++i) {
      double idx = 0.0;
      switch (mp.rounding) {
        case MergePolicy::Rounding::Down:
          idx = std::floor(llr_[i] / mp.grid_step);
          break;
        case MergePolicy::Rounding::Up:
          idx = std::ceil(llr_[i] / mp.grid_step);
          break;
        case MergePolicy::Rounding::Nearest:
          idx = std::round(llr_[i] / mp.grid_step);
          break;
      }
      atoms.emplace_back(idx * mp.grid_step, mass_[i]);
    }
    std::sort(atoms.begin(), atoms.end());
    llr_.clear();
    mass_.clear();
    for (const auto& [v, m] : atoms) {
      if (!llr_.empty() && v == llr_.back()) {
        mass_.back() += m;
      } else {
        llr_.push_back(v);
        mass_.push_back(m);
      }
    }
  }

  std::vector<double> llr_;
  std::vector<double> mass_;
};

// Per-period kernel: the distribution of a single signal's LLR under `state`.
inline LlrDist signal_kernel(const SignalModel& m, State state,
                             const MergePolicy& mp = {}) {
  std::vector<std::pair<double, double>> atoms;
  const auto& f = m.f_d(state);
  for (int i = 0; i < m.size(); ++i) atoms.emplace_back(m.llr[i], f[i]);
  return LlrDist::from_atoms(std::move(atoms), mp);
}

// n-fold convolution by binary exponentiation.
inline LlrDist nfold(const LlrDist& kernel, int n, const MergePolicy& mp = {}) {
  LlrDist result = LlrDist::point_mass(0.0);
  if (n <= 0) return result;
  LlrDist base = kernel;
  int k = n;
  while (k > 0) {
    if (k & 1) result.convolve(base, mp);
    k >>= 1;
    if (k > 0) base.convolve(base, mp);
  }
  return result;
}

}  // namespace coinvest
