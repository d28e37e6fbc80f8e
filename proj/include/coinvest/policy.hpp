#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "coinvest/common.hpp"

namespace coinvest {

// Formats a double so it round-trips bit-exactly (hex) next to a readable
// decimal. Locale-independent by construction.
inline std::string format_double_hex(double x) {
  char buf[48];
  auto r = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::hex);
  return std::string(buf, r.ptr);
}

inline std::string format_double(double x) {
  char buf[48];
  auto r =
      std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline double parse_double_hex(const std::string& s) {
  double x = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  bool neg = false;
  if (begin != end && (*begin == '-' || *begin == '+')) {
    neg = *begin == '-';
    ++begin;
  }
  auto r = std::from_chars(begin, end, x, std::chars_format::hex);
  if (r.ec != std::errc() || r.ptr != end) {
    throw param_error("not a hex float: '" + s + "'");
  }
  return neg ? -x : x;
}

// A deterministic threshold strategy over investment-phase public histories.
//
// Histories are keyed by the sequence of action profiles realized at
// investment periods, tokens like "II.IN.NN"; cool-off periods are forced
// (N,N) and contribute no tokens. The empty key is the opening investment
// node. Thresholds are log-odds on the High state: the player invests iff
// their belief clears the threshold, ties investing. +inf encodes "never
// invest", -inf "always invest once permitted".
//
// Class constraints (NoInvest at every cool-off history, and NoInvest forever
// once anyone invested during a cool-off) are enforced by the play machinery,
// which only consults thresholds at investment nodes.
struct ThresholdPolicy {
  std::map<std::string, double> thresholds;
  double default_threshold = 0.0;

  double threshold_log_odds(const std::string& key) const {
    auto it = thresholds.find(key);
    return it == thresholds.end() ? default_threshold : it->second;
  }
  double threshold_belief(const std::string& key) const {
    return logistic(threshold_log_odds(key));
  }

  static ThresholdPolicy constant(double log_odds) {
    ThresholdPolicy p;
    p.default_threshold = log_odds;
    return p;
  }
  static ThresholdPolicy constant_belief(double belief) {
    return constant(belief <= 0.0
                        ? -std::numeric_limits<double>::infinity()
                        : belief >= 1.0
                              ? std::numeric_limits<double>::infinity()
                              : logit(belief));
  }
  static ThresholdPolicy never_invest() {
    return constant(std::numeric_limits<double>::infinity());
  }
  static ThresholdPolicy always_invest() {
    return constant(-std::numeric_limits<double>::infinity());
  }

  // Text rows: "default <hex> <decimal-belief>" then one "row <key> ..." per
  // tabulated history; the empty key prints as "-". Hex column round-trips
  // bit-exactly.
  void serialize_rows(std::ostream& os) const {
    os << "default " << format_double_hex(default_threshold) << " "
       << format_double(logistic(default_threshold)) << "\n";
    for (const auto& [key, value] : thresholds) {
      os << "row " << (key.empty() ? "-" : key) << " "
         << format_double_hex(value) << " " << format_double(logistic(value))
         << "\n";
    }
  }

  static ThresholdPolicy parse_rows(std::istream& is) {
    ThresholdPolicy p;
    bool saw_default = false;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (tag == "default") {
        std::string hex;
        ls >> hex;
        p.default_threshold = parse_double_hex(hex);
        saw_default = true;
      } else if (tag == "row") {
        std::string key, hex;
        ls >> key >> hex;
        if (key.empty() || hex.empty()) {
          throw param_error("malformed policy row: '" + line + "'");
        }
        p.thresholds[key == "-" ? "" : key] = parse_double_hex(hex);
      } else {
        throw param_error("unknown policy line: '" + line + "'");
      }
    }
    if (!saw_default) throw param_error("policy rows missing 'default'");
    return p;
  }
};

}  // namespace coinvest
