#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's numerical code.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Binary probit log-likelihood written directly from the Bernoulli mass.
inline double probit_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double e = X.row(i).dot(b);
    const double p = phi_cdf(e);
    const double q = phi_cdf(-e);
    s += y(i) * std::log(p) + (1.0 - y(i)) * std::log(q);
  }
  return s;
}

inline double logit_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-X.row(i).dot(b)));
    s += y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p);
  }
  return s;
}

inline double poisson_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double mu = std::exp(X.row(i).dot(b));
    s += y(i) * std::log(mu) - mu;
  }
  return s;
}

/// Gamma quasi-likelihood with inverse link: -y/mu - log(mu).
inline double gamma_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double theta = X.row(i).dot(b);
    if (theta <= 0) return -INFINITY;
    const double mu = 1.0 / theta;
    s += -y(i) / mu - std::log(mu);
  }
  return s;
}

/// Cumulative probit likelihood, P(Y <= j) = Phi(a_j - x'b); params = (b, a).
inline double ordinal_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int J,
                             const Eigen::VectorXd& params) {
  const Eigen::Index p = X.cols();
  for (int k = 1; k < J - 1; ++k)
    if (params(p + k) <= params(p + k - 1)) return -INFINITY;
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double e = X.row(i).dot(params.head(p));
    const int j = static_cast<int>(y(i));
    const double up = j == J ? 1.0 : phi_cdf(params(p + j - 1) - e);
    const double lo = j == 1 ? 0.0 : phi_cdf(params(p + j - 2) - e);
    s += std::log(up - lo);
  }
  return s;
}

/// Nelder-Mead maximization with restarts, tight simplex tolerance.
inline Eigen::VectorXd nelder_mead_max(const std::function<double(const Eigen::VectorXd&)>& f,
                                       Eigen::VectorXd x0, double step = 0.5, int restarts = 8) {
  const Eigen::Index d = x0.size();
  auto neg = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    return std::isfinite(v) ? -v : INFINITY;
  };
  for (int r = 0; r < restarts; ++r) {
    std::vector<Eigen::VectorXd> s(d + 1, x0);
    for (Eigen::Index k = 0; k < d; ++k) s[k + 1](k) += step;
    std::vector<double> fv(d + 1);
    for (Eigen::Index k = 0; k <= d; ++k) fv[k] = neg(s[k]);
    for (int it = 0; it < 20000; ++it) {
      std::vector<int> idx(d + 1);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
      std::vector<Eigen::VectorXd> s2;
      std::vector<double> f2;
      for (int k : idx) {
        s2.push_back(s[k]);
        f2.push_back(fv[k]);
      }
      s = s2;
      fv = f2;
      double spread = 0.0;
      for (Eigen::Index k = 1; k <= d; ++k) spread = std::max(spread, (s[k] - s[0]).cwiseAbs().maxCoeff());
      if (spread < 1e-11) break;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
      for (Eigen::Index k = 0; k < d; ++k) c += s[k];
      c /= static_cast<double>(d);
      const Eigen::VectorXd xr = c + (c - s[d]);
      const double fr = neg(xr);
      if (fr < fv[0]) {
        const Eigen::VectorXd xe = c + 2.0 * (c - s[d]);
        const double fe = neg(xe);
        if (fe < fr) {
          s[d] = xe;
          fv[d] = fe;
        } else {
          s[d] = xr;
          fv[d] = fr;
        }
      } else if (fr < fv[d - 1]) {
        s[d] = xr;
        fv[d] = fr;
      } else {
        const Eigen::VectorXd xc = fr < fv[d] ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (s[d] - c));
        const double fc = neg(xc);
        if (fc < std::min(fr, fv[d])) {
          s[d] = xc;
          fv[d] = fc;
        } else {
          for (Eigen::Index k = 1; k <= d; ++k) {
            s[k] = s[0] + 0.5 * (s[k] - s[0]);
            fv[k] = neg(s[k]);
          }
        }
      }
    }
    x0 = s[0];
    step = std::max(1e-3, step * 0.3);
  }
  return x0;
}

/// Squared euclidean distance by explicit double loop.
inline double sq_dist(const Eigen::MatrixXd& X, Eigen::Index i, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < X.cols(); ++k) s += (X(i, k) - X(j, k)) * (X(i, k) - X(j, k));
  return s;
}

/// Two-pass sample standard deviation, divisor m.
inline double sd_two_pass(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace oracle

namespace oracle {

/// One-sample Kolmogorov-Smirnov distance to a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> v, Cdf cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Two-sample KS distance by evaluating both empirical CDFs at every pooled
/// point with a linear count (quadratic, for small samples only).
inline double ks_two_sample_brute(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  auto ecdf = [](const std::vector<double>& v, double t) {
    double c = 0;
    for (double x : v) c += x <= t;
    return c / static_cast<double>(v.size());
  };
  for (const auto* v : {&a, &b})
    for (double t : *v) d = std::max(d, std::abs(ecdf(a, t) - ecdf(b, t)));
  return d;
}

}  // namespace oracle
