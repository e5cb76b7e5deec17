// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace asn::stats {

double mean(const std::vector<double>& x);
double median(std::vector<double> x);
// Linear interpolation between order statistics, q in [0, 100].
double percentile(std::vector<double> x, double q);

// Ranks with ties averaged, 1-based.
std::vector<double> ranks(const std::vector<double>& x);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct TrendTest {
  double s = 0.0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided
  double tau = 0.0;
};

// Mann-Kendall monotone trend test with tie-corrected variance.
TrendTest mann_kendall(const std::vector<double>& series);

// Pearson chi-square goodness of fit against equal expected counts; returns the p-value.
double chi_square_uniform(const std::vector<long>& counts);

}  // namespace asn::stats
