#pragma once

// Adaptive Dormand-Prince 5(4) integrator with PI step-size control.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace torusblock {

class StepUnderflow : public std::runtime_error {
 public:
  StepUnderflow(double t, double h)
      : std::runtime_error("step size underflow (h=" + std::to_string(h) + ") at s=" + std::to_string(t) +
                           "; the metric is stiff here"),
        where(t) {}
  double where;
};

class NonFiniteState : public std::runtime_error {
 public:
  explicit NonFiniteState(double t)
      : std::runtime_error("non-finite integrator state at s=" + std::to_string(t) + "; check the metric input"),
        where(t) {}
  double where;
};

struct StepperOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double h_init = 0.0;  // 0 selects an automatic first step
  double h_max = 0.1;
  double h_min = 1e-13;
  long max_steps = 50'000'000;
};

template <std::size_t N>
using State = std::array<double, N>;

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  double t_end = 0.0;
  bool stopped_early = false;
};

namespace detail {

// Dormand-Prince tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace detail

/// Integrate y' = f(t, y) from t = 0 to t_end.
///
/// After every accepted step `on_step(t0, y0, f0, t1, y1, f1)` is called; it
/// returns false to stop the integration early. `f` has the signature
/// `void(double t, const State<N>& y, State<N>& dydt)`.
template <std::size_t N, class Rhs, class OnStep>
IntegrationStats integrate_dp54(Rhs&& f, State<N> y, double t_end, const StepperOptions& opt, OnStep&& on_step) {
  using namespace detail;
  IntegrationStats stats;
  double t = 0.0;
  State<N> k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
  f(t, y, k1);

  auto scale = [&](std::size_t i, double a, double b) { return opt.atol + opt.rtol * std::max(std::abs(a), std::abs(b)); };

  double h = opt.h_init;
  if (h <= 0.0) {
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = scale(i, y[i], y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min({h, opt.h_max, 1e-3});
  }

  double err_prev = 1e-4;
  bool last_rejected = false;
  while (t < t_end) {
    if (stats.accepted + stats.rejected > opt.max_steps) throw StepUnderflow(t, h);
    bool final_step = false;
    if (t + h >= t_end) {
      h = t_end - t;
      final_step = true;
    }
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    f(t + h, ynew, k7);

    double err = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) {
      if (!std::isfinite(ynew[i])) finite = false;
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double r = e / scale(i, y[i], ynew[i]);
      err += r * r;
    }
    if (!finite) throw NonFiniteState(t);
    err = std::sqrt(err / N);

    if (err <= 1.0) {
      const double t_new = final_step ? t_end : t + h;
      ++stats.accepted;
      const bool go_on = on_step(t, y, k1, t_new, ynew, k7);
      t = t_new;
      y = ynew;
      k1 = k7;
      if (!go_on) {
        stats.stopped_early = true;
        break;
      }
      // PI controller (Gustafsson), exponents 0.7/5 and 0.4/5.
      double fac = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.14) * std::pow(err_prev, 0.08);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * fac, opt.h_max);
      err_prev = std::max(err, 1e-4);
      last_rejected = false;
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      last_rejected = true;
      if (h < opt.h_min) throw StepUnderflow(t, h);
    }
  }
  stats.t_end = t;
  return stats;
}

}  // namespace torusblock
