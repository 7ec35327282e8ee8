#pragma once

#include <functional>
#include <vector>

namespace milestone {

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

/// Mean with naive standard error (independent samples).
MeanEstimate mean_stderr(const std::vector<double>& x);

/// Ratio estimator sum(num)/sum(den) with the batch-means standard error, using batches with
/// positive denominator. Fewer than two usable batches gives stderr = NaN.
MeanEstimate batch_ratio(const std::vector<double>& num, const std::vector<double>& den);

/// Upper tail P(X >= x) of a chi-square variable.
double chi_square_sf(double x, double dof);

/// sup |F_n - F| for sorted samples and a continuous CDF.
double ks_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf);

/// (a - b) / sqrt(sa^2 + sb^2); 0 when both errors vanish and a == b.
double z_score(double a, double sa, double b, double sb);

}  // namespace milestone
