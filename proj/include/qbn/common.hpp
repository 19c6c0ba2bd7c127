#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbn {

// Parent sets and conditioning sets are bit masks over node ids < 64.
using NodeMask = std::uint64_t;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Error taxonomy. The CLI maps Error subclasses to exit code 1 and
// usage problems to exit code 2, so library code should throw these
// rather than raw std exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Enumeration or memory bound exceeded.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Malformed input text; carries 1-based row/column where known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int row = -1, int col = -1)
      : Error(locate(msg, row, col)), row(row), col(col) {}
  int row;
  int col;

 private:
  static std::string locate(const std::string& msg, int row, int col) {
    std::string s = msg;
    if (row >= 0) s += " (row " + std::to_string(row);
    if (row >= 0 && col >= 0) s += ", column " + std::to_string(col);
    if (row >= 0) s += ")";
    return s;
  }
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidFeatureError : public Error {
 public:
  using Error::Error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

// Amplitude amplification asked to amplify a state with no target weight.
class NoTargetError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// A simulated state failed a structural assertion (residual amplitude
// where the construction guarantees zero); signals a circuit bug.
class StateStructureError : public Error {
 public:
  using Error::Error;
};

inline int popcount(NodeMask m) { return std::popcount(m); }

inline bool has_bit(NodeMask m, int i) { return (m >> i) & 1u; }

inline NodeMask bit(int i) { return NodeMask{1} << i; }

inline std::vector<int> mask_to_list(NodeMask m) {
  std::vector<int> out;
  while (m != 0) {
    int i = std::countr_zero(m);
    out.push_back(i);
    m &= m - 1;
  }
  return out;
}

inline NodeMask list_to_mask(const std::vector<int>& items) {
  NodeMask m = 0;
  for (int i : items) m |= bit(i);
  return m;
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

inline std::uint64_t factorial(int n) {
  std::uint64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= static_cast<std::uint64_t>(i);
  return r;
}

// log(exp(a) + exp(b)) without overflow; -inf represents an exact zero.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// Running-max log-sum-exp over a sequence of log terms.
inline double log_sum_exp(std::span<const double> logs) {
  double hi = kNegInf;
  for (double v : logs)
    if (v > hi) hi = v;
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : logs)
    if (v != kNegInf) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

// Exact log n! via lgamma; used for scores and amplitude bookkeeping.
inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Stirling approximation of log n!; resource estimates only, never scores.
inline double stirling_log_factorial(double n) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  return 0.5 * std::log(two_pi * n) + n * (std::log(n) - 1.0);
}

}  // namespace qbn
