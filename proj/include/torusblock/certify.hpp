#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "torusblock/connect.hpp"

namespace torusblock {

enum class Minimality { minimal, not_minimal, inconclusive };

inline const char* to_string(Minimality m) {
  switch (m) {
    case Minimality::minimal: return "minimal";
    case Minimality::not_minimal: return "not_minimal";
    case Minimality::inconclusive: return "inconclusive";
  }
  return "?";
}

struct MinimalityCertificate {
  Minimality verdict = Minimality::inconclusive;
  double worst_defect = 0.0;  // max over probed pairs of |s - s'| - d(gamma(s), gamma(s'))
  int pairs_checked = 0;
  int pairs_failed = 0;

  bool is_minimal() const { return verdict == Minimality::minimal; }
};

struct CertifyOptions {
  double defect_tol = 1e-5;
  std::uint64_t seed = 20240601;
  ConnectOptions connect;
};

/// Sampled check that a path realises distance between its own points.
///
/// The endpoint pair is always probed, plus `n_probes` random pairs. The
/// connector only ever finds geodesics at least as long as the true
/// distance, so a defect above tolerance is conclusive while a connector
/// failure leaves the verdict open.
inline MinimalityCertificate certify_minimal(const TorusMetric& metric, const GeodesicPath& path, int n_probes,
                                             const CertifyOptions& opt = {}) {
  if (n_probes < 2) throw std::invalid_argument("certify_minimal: n_probes must be >= 2");
  MinimalityCertificate cert;
  const double L = path.total_length;
  if (L <= 0.0) {
    cert.verdict = Minimality::minimal;
    return cert;
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(0.0, L);
  double worst = -INFINITY;
  for (int k = 0; k <= n_probes; ++k) {
    double s0 = 0.0, s1 = L;
    if (k > 0) {
      s0 = U(rng);
      s1 = U(rng);
    }
    const double gap = std::abs(s1 - s0);
    ++cert.pairs_checked;
    if (gap < 1e-12) {
      worst = std::max(worst, 0.0);
      continue;
    }
    const auto d = geodesic_distance(metric, path.at(s0).pos, path.at(s1).pos, opt.connect);
    if (!d) {
      ++cert.pairs_failed;
      continue;
    }
    worst = std::max(worst, gap - *d);
  }
  cert.worst_defect = std::isfinite(worst) ? worst : 0.0;
  if (cert.worst_defect > opt.defect_tol)
    cert.verdict = Minimality::not_minimal;
  else
    cert.verdict = cert.pairs_failed > 0 ? Minimality::inconclusive : Minimality::minimal;
  return cert;
}

}  // namespace torusblock
