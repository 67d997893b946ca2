#pragma once

// Test-side oracles, independent of the backward pass they check.

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

// Central finite differences of f at x, step eps.
inline std::vector<double> central_fd(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double eps) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double orig = x[i];
    x[i] = orig + eps;
    double fp = f(x);
    x[i] = orig - eps;
    double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

// Elementwise agreement rule: relative error < rel_tol, absolute error
// < abs_tol where both magnitudes are below 1e-3.
inline bool grads_agree(const std::vector<double>& analytic, const std::vector<double>& fd,
                        double rel_tol, double abs_tol, std::string* why = nullptr) {
  if (analytic.size() != fd.size()) {
    if (why) *why = "size mismatch";
    return false;
  }
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double a = analytic[i], b = fd[i];
    double mag = std::max(std::fabs(a), std::fabs(b));
    double err = std::fabs(a - b);
    bool ok = mag < 1e-3 ? err < abs_tol : err / mag < rel_tol;
    if (!ok) {
      if (why) {
        std::ostringstream os;
        os << "component " << i << ": analytic " << a << " vs fd " << b;
        *why = os.str();
      }
      return false;
    }
  }
  return true;
}

inline double population_std(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(x.size()));
}

}  // namespace oracle
