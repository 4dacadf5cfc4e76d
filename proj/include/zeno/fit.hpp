#pragma once

// Trace analysis: Lorentzian line fits (Gauss-Newton with step halving),
// re-zeroing, trial averaging, difference signals and contrast metrics.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "trace.hpp"

namespace zeno {

enum class Polarity { peak, dip };
enum class Channel { through, drop };

struct FitResult {
  std::vector<double> parameters;     // model-specific, see the fit function
  std::vector<double> uncertainties;  // 1-sigma from the curvature at the optimum
  double residual_norm = 0.0;         // rms residual
  bool converged = false;
  int iterations = 0;
};

// Convenience view of fit_lorentzian parameters [A, f0, fwhm, B].
struct LorentzianModel {
  double amplitude = 0.0;
  double center_hz = 0.0;
  double fwhm_hz = 0.0;
  double baseline = 0.0;
  Polarity polarity = Polarity::peak;

  double operator()(double x) const {
    const double g = 0.5 * fwhm_hz;
    const double d = x - center_hz;
    const double lor = g * g / (d * d + g * g);
    return baseline + (polarity == Polarity::dip ? -1.0 : 1.0) * amplitude * lor;
  }

  static LorentzianModel from_fit(const FitResult& r, Polarity pol) {
    if (r.parameters.size() != 4)
      throw std::invalid_argument("expected a 4-parameter Lorentzian fit");
    return {r.parameters[0], r.parameters[1], r.parameters[2], r.parameters[3],
            pol};
  }
};

namespace detail {

inline double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double m = v[n / 2];
  if (n % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    m = 0.5 * (m + v[n / 2 - 1]);
  }
  return m;
}

}  // namespace detail

// Fit y = B +/- A * (G/2)^2 / ((x-f0)^2 + (G/2)^2) by damped Gauss-Newton.
// Parameters [A, f0, fwhm, B]; x internally shifted/scaled so the normal
// equations stay well conditioned for axes in Hz.
inline FitResult fit_lorentzian(std::span<const double> x,
                                std::span<const double> y, Polarity polarity) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("x and y lengths differ");
  if (n < 8)
    throw std::invalid_argument("need at least 8 samples for a line fit");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw std::invalid_argument("fit input contains non-finite values");

  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  if (*ymax_it == *ymin_it)
    throw std::invalid_argument("cannot fit a line to a flat trace");
  const double xmin = x.front();
  const double xmax = x.back();
  if (!(xmax > xmin)) throw std::invalid_argument("x axis must increase");

  const double sign = polarity == Polarity::dip ? -1.0 : 1.0;

  // Initial guess: baseline from the edge medians, centre at the extremum,
  // width from the half-amplitude crossings.
  const std::size_t k = std::max<std::size_t>(2, n / 10);
  std::vector<double> edges;
  for (std::size_t i = 0; i < k; ++i) {
    edges.push_back(y[i]);
    edges.push_back(y[n - 1 - i]);
  }
  double b0 = detail::median_of(edges);
  const std::size_t iext = static_cast<std::size_t>(
      (polarity == Polarity::dip ? ymin_it : ymax_it) - y.begin());
  double a0 = std::abs(y[iext] - b0);
  if (a0 == 0.0) a0 = 0.5 * (*ymax_it - *ymin_it);
  const double half_level = b0 + sign * 0.5 * a0;
  double left = xmin, right = xmax;
  bool got_left = false, got_right = false;
  for (std::size_t i = iext; i-- > 0;) {
    if (sign * (y[i] - half_level) < 0.0) {
      const double t = (half_level - y[i]) / (y[i + 1] - y[i]);
      left = x[i] + t * (x[i + 1] - x[i]);
      got_left = true;
      break;
    }
  }
  for (std::size_t i = iext + 1; i < n; ++i) {
    if (sign * (y[i] - half_level) < 0.0) {
      const double t = (half_level - y[i - 1]) / (y[i] - y[i - 1]);
      right = x[i - 1] + t * (x[i] - x[i - 1]);
      got_right = true;
      break;
    }
  }
  double w0 = right - left;
  if (!got_left && !got_right) w0 = 0.5 * (xmax - xmin);
  else if (!got_left) w0 = 2.0 * (right - x[iext]);
  else if (!got_right) w0 = 2.0 * (x[iext] - left);
  if (!(w0 > 0.0)) w0 = 0.25 * (xmax - xmin);

  // Work in u = (x - c) / s.
  const double c = x[iext];
  const double s = w0;
  Eigen::Vector4d p(a0, 0.0, w0 / s, b0);  // [A, u0, w, B]

  const auto sse_of = [&](const Eigen::Vector4d& q) {
    const double g = 0.5 * q[2];
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - c) / s;
      const double d = u - q[1];
      const double lor = g * g / (d * d + g * g);
      const double r = q[3] + sign * q[0] * lor - y[i];
      sse += r * r;
    }
    return sse;
  };

  double sse = sse_of(p);
  FitResult out;
  constexpr int kMaxIter = 200;
  constexpr double kRelTol = 1e-10;
  Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
  for (int it = 1; it <= kMaxIter; ++it) {
    out.iterations = it;
    const double g = 0.5 * p[2];
    jtj.setZero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - c) / s;
      const double d = u - p[1];
      const double denom = d * d + g * g;
      const double lor = g * g / denom;
      const double r = p[3] + sign * p[0] * lor - y[i];
      Eigen::Vector4d j;
      j[0] = sign * lor;
      j[1] = sign * p[0] * lor * lor * 2.0 * d / (g * g);
      j[2] = sign * p[0] * 0.5 * g * d * d / (denom * denom) * 2.0;
      j[3] = 1.0;
      jtj.noalias() += j * j.transpose();
      jtr.noalias() += j * r;
    }
    const Eigen::Vector4d step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) break;

    // Step halving until the residual decreases.
    double lambda = 1.0;
    bool accepted = false;
    Eigen::Vector4d trial;
    for (int halvings = 0; halvings < 40; ++halvings) {
      trial = p + lambda * step;
      if (trial[2] > 0.0) {
        const double trial_sse = sse_of(trial);
        if (trial_sse <= sse) {
          accepted = true;
          sse = trial_sse;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) break;

    double rel = 0.0;
    for (int j = 0; j < 4; ++j)
      rel = std::max(rel, std::abs(lambda * step[j]) /
                              std::max(std::abs(trial[j]), 1e-30));
    p = trial;
    if (rel < kRelTol) {
      out.converged = true;
      break;
    }
  }

  out.parameters = {p[0], c + p[1] * s, p[2] * s, p[3]};
  out.residual_norm = std::sqrt(sse / static_cast<double>(n));
  out.uncertainties.assign(4, 0.0);
  if (n > 4) {
    const double variance = sse / static_cast<double>(n - 4);
    const Eigen::Matrix4d cov = jtj.inverse() * variance;
    const double scale[4] = {1.0, s, s, 1.0};
    for (int j = 0; j < 4; ++j)
      out.uncertainties[j] =
          scale[j] * std::sqrt(std::max(0.0, cov(j, j)));
  }
  return out;
}

inline FitResult fit_lorentzian(const ScanTrace& trace, Channel channel,
                                Polarity polarity) {
  trace.validate();
  const auto& y = channel == Channel::through ? trace.through : trace.drop;
  return fit_lorentzian(std::span<const double>(trace.detuning_hz),
                        std::span<const double>(y), polarity);
}

// Shift the axis so the fitted centre sits at zero.
inline ScanTrace rezero(ScanTrace trace, double center_hz) {
  for (double& d : trace.detuning_hz) d -= center_hz;
  if (std::isfinite(trace.true_center_hz)) trace.true_center_hz -= center_hz;
  return trace;
}

// Mean of several traces on their common axis window, resampled at the
// density of the finest input.  A single trace is returned unchanged.
inline ScanTrace average_trials(const std::vector<ScanTrace>& traces) {
  if (traces.empty())
    throw std::invalid_argument("cannot average zero traces");
  for (const auto& t : traces) t.validate();
  if (traces.size() == 1) return traces.front();

  double lo = traces.front().detuning_hz.front();
  double hi = traces.front().detuning_hz.back();
  double finest = hi - lo;
  for (const auto& t : traces) {
    lo = std::max(lo, t.detuning_hz.front());
    hi = std::min(hi, t.detuning_hz.back());
    finest = std::min(finest, (t.detuning_hz.back() - t.detuning_hz.front()) /
                                  static_cast<double>(t.size() - 1));
  }
  if (!(hi > lo))
    throw std::invalid_argument("traces have no overlapping detuning window");

  const int m = std::max(2, static_cast<int>(std::lround((hi - lo) / finest)) + 1);
  ScanTrace avg;
  avg.condition = traces.front().condition;
  avg.trial_id = -1;
  avg.detuning_hz.resize(m);
  avg.through.assign(m, 0.0);
  avg.drop.assign(m, 0.0);
  const double step = (hi - lo) / (m - 1);
  for (int i = 0; i < m; ++i)
    avg.detuning_hz[i] = (i == m - 1) ? hi : lo + step * i;
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (const auto& t : traces) {
    for (int i = 0; i < m; ++i) {
      avg.through[i] += inv * interpolate(t.detuning_hz, t.through,
                                          avg.detuning_hz[i]);
      avg.drop[i] += inv * interpolate(t.detuning_hz, t.drop,
                                       avg.detuning_hz[i]);
    }
  }
  return avg;
}

// a minus b, interpolated onto their common window (density of the finer).
inline ScanTrace difference_signal(const ScanTrace& a, const ScanTrace& b) {
  a.validate();
  b.validate();
  const double lo = std::max(a.detuning_hz.front(), b.detuning_hz.front());
  const double hi = std::min(a.detuning_hz.back(), b.detuning_hz.back());
  if (!(hi > lo))
    throw std::invalid_argument("traces have no overlapping detuning window");
  const double step_a =
      (a.detuning_hz.back() - a.detuning_hz.front()) / (a.size() - 1);
  const double step_b =
      (b.detuning_hz.back() - b.detuning_hz.front()) / (b.size() - 1);
  const double finest = std::min(step_a, step_b);
  const int m = std::max(2, static_cast<int>(std::lround((hi - lo) / finest)) + 1);
  ScanTrace d;
  d.condition = Condition::difference;
  d.trial_id = -1;
  d.detuning_hz.resize(m);
  d.through.resize(m);
  d.drop.resize(m);
  const double step = (hi - lo) / (m - 1);
  for (int i = 0; i < m; ++i) {
    const double xq = (i == m - 1) ? hi : lo + step * i;
    d.detuning_hz[i] = xq;
    d.through[i] = interpolate(a.detuning_hz, a.through, xq) -
                   interpolate(b.detuning_hz, b.through, xq);
    d.drop[i] = interpolate(a.detuning_hz, a.drop, xq) -
                interpolate(b.detuning_hz, b.drop, xq);
  }
  return d;
}

// Fit y = alpha / (x + f0)^2 with the singularity outside the data range.
// Inner closed-form solve for alpha, outer golden-section search on f0.
// Parameters [alpha, f0].
inline FitResult fit_inverse_square(std::span<const double> x,
                                    std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("x and y lengths differ");
  if (n < 3) throw std::invalid_argument("need at least 3 samples");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw std::invalid_argument("fit input contains non-finite values");
  const double xmin = *std::min_element(x.begin(), x.end());
  const double xmax = *std::max_element(x.begin(), x.end());
  if (!(xmax > xmin)) throw std::invalid_argument("x axis must increase");
  if (*std::max_element(y.begin(), y.end()) <= 0.0)
    throw std::invalid_argument("signal must be positive somewhere");

  // A genuine 1/(x+f0)^2 profile with the pole outside the data is monotone;
  // a strong interior maximum means the singularity sits inside the range.
  const std::size_t imax = static_cast<std::size_t>(
      std::max_element(y.begin(), y.end()) - y.begin());
  const std::size_t margin = std::max<std::size_t>(1, n / 10);
  if (imax >= margin && imax + margin < n &&
      y[imax] > 2.0 * std::max(y.front(), y.back()))
    throw std::invalid_argument(
        "inverse-square singularity lies inside the data range");

  const double range = xmax - xmin;
  const auto sse_alpha = [&](double f0) {
    // least-squares alpha for fixed f0: alpha = sum(y*w) / sum(w^2)
    double sw2 = 0.0, syw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 1.0 / ((x[i] + f0) * (x[i] + f0));
      sw2 += w * w;
      syw += y[i] * w;
    }
    const double alpha = sw2 > 0.0 ? syw / sw2 : 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = alpha / ((x[i] + f0) * (x[i] + f0)) - y[i];
      sse += r * r;
    }
    return std::pair<double, double>(sse, alpha);
  };

  // Coarse geometric scan of the pole offset on both sides of the data,
  // then golden-section refinement around the best cell.
  const double eps = 1e-6 * range;
  double best_sse = std::numeric_limits<double>::infinity();
  int best_side = 0, best_idx = 0;
  constexpr int kCoarse = 192;
  std::vector<double> offsets(kCoarse);
  for (int i = 0; i < kCoarse; ++i)
    offsets[i] = eps * std::pow(1e9 / 1e-6, i / double(kCoarse - 1));
  for (int side = 0; side < 2; ++side) {
    for (int i = 0; i < kCoarse; ++i) {
      // side 0: pole left of the data (f0 > -xmin); side 1: pole right.
      const double f0 = side == 0 ? -xmin + offsets[i] : -xmax - offsets[i];
      const double sse = sse_alpha(f0).first;
      if (sse < best_sse) {
        best_sse = sse;
        best_side = side;
        best_idx = i;
      }
    }
  }

  const auto f0_at = [&](int side, int idx) {
    const double off = offsets[std::clamp(idx, 0, kCoarse - 1)];
    return side == 0 ? -xmin + off : -xmax - off;
  };
  double a = f0_at(best_side, best_idx - 1);
  double b = f0_at(best_side, best_idx + 1);
  if (a > b) std::swap(a, b);
  constexpr double kGolden = 0.6180339887498949;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = sse_alpha(x1).first;
  double f2 = sse_alpha(x2).first;
  int iters = 0;
  while ((b - a) > 1e-13 * std::max(std::abs(a), std::abs(b)) + 1e-9 &&
         iters < 300) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = sse_alpha(x1).first;
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = sse_alpha(x2).first;
    }
    ++iters;
  }
  const double f0 = 0.5 * (a + b);
  const auto [sse, alpha] = sse_alpha(f0);

  // The pole -f0 must stay clear of the sampled window.
  const double pole = -f0;
  if (pole > xmin - 1e-3 * range && pole < xmax + 1e-3 * range)
    throw std::invalid_argument(
        "inverse-square singularity lies inside the data range");

  FitResult out;
  out.parameters = {alpha, f0};
  out.iterations = iters;
  out.converged = iters < 300;
  out.residual_norm = std::sqrt(sse / static_cast<double>(n));
  // Curvature-based uncertainties from the 2-parameter Jacobian.
  double j11 = 0, j12 = 0, j22 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = x[i] + f0;
    const double da = 1.0 / (q * q);
    const double df = -2.0 * alpha / (q * q * q);
    j11 += da * da;
    j12 += da * df;
    j22 += df * df;
  }
  const double det = j11 * j22 - j12 * j12;
  out.uncertainties.assign(2, 0.0);
  if (det > 0.0 && n > 2) {
    const double variance = sse / static_cast<double>(n - 2);
    out.uncertainties[0] = std::sqrt(variance * j22 / det);
    out.uncertainties[1] = std::sqrt(variance * j11 / det);
  }
  return out;
}

// Switching contrast between re-zeroed averaged traces (both axes centred on
// their own fitted cavity position).  Signs follow "tpa minus control".
struct ContrastMetrics {
  double through_change_center = 0.0;  // Delta T_t at detuning 0
  double drop_change_center = 0.0;     // Delta T_d at detuning 0
  double relative_dip_depth_change = 0.0;  // (A_tpa - A_ctl)/A_ctl, through dip
  double peak_through_diff_hz = 0.0;   // where |through difference| peaks
  double peak_drop_diff_hz = 0.0;
};

inline ContrastMetrics contrast_metrics(const ScanTrace& tpa_avg,
                                        const ScanTrace& control_avg) {
  const auto th_t = LorentzianModel::from_fit(
      fit_lorentzian(tpa_avg, Channel::through, Polarity::dip), Polarity::dip);
  const auto th_c = LorentzianModel::from_fit(
      fit_lorentzian(control_avg, Channel::through, Polarity::dip),
      Polarity::dip);
  const auto dr_t = LorentzianModel::from_fit(
      fit_lorentzian(tpa_avg, Channel::drop, Polarity::peak), Polarity::peak);
  const auto dr_c = LorentzianModel::from_fit(
      fit_lorentzian(control_avg, Channel::drop, Polarity::peak),
      Polarity::peak);

  ContrastMetrics m;
  m.through_change_center = th_t(0.0) - th_c(0.0);
  m.drop_change_center = dr_t(0.0) - dr_c(0.0);
  if (th_c.amplitude != 0.0)
    m.relative_dip_depth_change =
        (th_t.amplitude - th_c.amplitude) / th_c.amplitude;

  const double lo = std::max(tpa_avg.detuning_hz.front(),
                             control_avg.detuning_hz.front());
  const double hi = std::min(tpa_avg.detuning_hz.back(),
                             control_avg.detuning_hz.back());
  if (!(hi > lo))
    throw std::invalid_argument("averaged traces do not overlap");
  constexpr int kDense = 4001;
  double best_th = -1.0, best_dr = -1.0;
  for (int i = 0; i < kDense; ++i) {
    const double xq = lo + (hi - lo) * i / (kDense - 1);
    const double dth = std::abs(th_t(xq) - th_c(xq));
    const double ddr = std::abs(dr_t(xq) - dr_c(xq));
    if (dth > best_th) { best_th = dth; m.peak_through_diff_hz = xq; }
    if (ddr > best_dr) { best_dr = ddr; m.peak_drop_diff_hz = xq; }
  }
  return m;
}

}  // namespace zeno
