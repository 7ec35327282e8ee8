#include "milestone/statistics.hpp"

#include "milestone/core.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace milestone {

MeanEstimate mean_stderr(const std::vector<double>& x) {
  MeanEstimate out;
  out.count = x.size();
  if (x.empty()) {
    out.mean = out.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double s = 0.0;
  for (double v : x) s += v;
  out.mean = s / x.size();
  if (x.size() < 2) {
    out.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double ss = 0.0;
  for (double v : x) ss += (v - out.mean) * (v - out.mean);
  out.stderr_ = std::sqrt(ss / (x.size() - 1) / x.size());
  return out;
}

MeanEstimate batch_ratio(const std::vector<double>& num, const std::vector<double>& den) {
  if (num.size() != den.size()) throw InvalidArgument("batch_ratio: size mismatch");
  double sn = 0.0, sd = 0.0;
  std::vector<double> ratios;
  for (std::size_t b = 0; b < num.size(); ++b) {
    sn += num[b];
    sd += den[b];
    if (den[b] > 0.0) ratios.push_back(num[b] / den[b]);
  }
  MeanEstimate out;
  out.count = ratios.size();
  out.mean = sd > 0.0 ? sn / sd : std::numeric_limits<double>::quiet_NaN();
  out.stderr_ = mean_stderr(ratios).stderr_;
  return out;
}

double chi_square_sf(double x, double dof) {
  if (!(dof > 0.0)) throw InvalidArgument("chi-square: degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

double ks_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double f = cdf(sorted[k]);
    d = std::max({d, std::abs((k + 1) / n - f), std::abs(k / n - f)});
  }
  return d;
}

double z_score(double a, double sa, double b, double sb) {
  const double s = std::sqrt(sa * sa + sb * sb);
  if (s == 0.0) return a == b ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), a - b);
  return (a - b) / s;
}

}  // namespace milestone
