#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zeno {

// tpa: pump on two-photon resonance.  control: pump parked off resonance.
// difference: an analysis product (tpa minus control), never simulated.
enum class Condition { tpa, control, difference };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::tpa: return "tpa";
    case Condition::control: return "control";
    case Condition::difference: return "difference";
  }
  throw std::invalid_argument("unknown condition tag");
}

inline Condition condition_from_string(std::string_view s) {
  if (s == "tpa") return Condition::tpa;
  if (s == "control") return Condition::control;
  if (s == "difference") return Condition::difference;
  throw std::invalid_argument("unknown condition tag: " + std::string(s));
}

// One frequency scan of both output ports.  The detuning axis is delta_Rb
// (pump detuning from the intermediate state) for raw scans, or the
// re-zeroed offset from the fitted cavity centre after analysis.
struct ScanTrace {
  std::vector<double> detuning_hz;
  std::vector<double> through;
  std::vector<double> drop;
  Condition condition = Condition::tpa;
  int trial_id = 0;
  // Where the cavity dip actually sat (centre + drift); NaN when unknown,
  // e.g. after reading from disk or averaging.
  double true_center_hz = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return detuning_hz.size(); }

  void validate() const {
    if (detuning_hz.size() != through.size() ||
        detuning_hz.size() != drop.size())
      throw std::invalid_argument("trace channels must have equal length");
    if (detuning_hz.empty())
      throw std::invalid_argument("trace must be non-empty");
    for (std::size_t i = 0; i + 1 < detuning_hz.size(); ++i)
      if (!(detuning_hz[i] < detuning_hz[i + 1]))
        throw std::invalid_argument("detuning axis must be strictly increasing");
    for (std::size_t i = 0; i < detuning_hz.size(); ++i)
      if (!std::isfinite(detuning_hz[i]) || !std::isfinite(through[i]) ||
          !std::isfinite(drop[i]))
        throw std::invalid_argument("trace contains non-finite values");
  }
};

// Linear interpolation on a strictly increasing axis; x must lie inside.
inline double interpolate(const std::vector<double>& x,
                          const std::vector<double>& y, double xq) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("interpolation needs two or more samples");
  if (xq < x.front() || xq > x.back())
    throw std::invalid_argument("interpolation query outside the axis");
  auto it = std::lower_bound(x.begin(), x.end(), xq);
  if (it == x.begin()) ++it;
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double t = (xq - x[lo]) / (x[hi] - x[lo]);
  return y[lo] + t * (y[hi] - y[lo]);
}

}  // namespace zeno
