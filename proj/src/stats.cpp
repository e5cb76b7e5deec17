// SPDX-License-Identifier: Apache-2.0
#include "asn/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace asn::stats {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double median(std::vector<double> x) { return percentile(std::move(x), 50.0); }

double percentile(std::vector<double> x, double q) {
  if (x.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(x.begin(), x.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson needs two equal samples of size >= 2");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) { return pearson(ranks(x), ranks(y)); }

TrendTest mann_kendall(const std::vector<double>& series) {
  const std::size_t n = series.size();
  TrendTest out;
  if (n < 3) return out;
  long s = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = series[j] - series[i];
      s += (d > 0) - (d < 0);
    }
  }
  std::map<double, long> ties;
  for (double v : series) ++ties[v];
  const double nd = static_cast<double>(n);
  double var = nd * (nd - 1) * (2 * nd + 5);
  for (const auto& [v, t] : ties) var -= static_cast<double>(t * (t - 1) * (2 * t + 5));
  var /= 18.0;
  out.s = static_cast<double>(s);
  if (var > 0) {
    if (s > 0) out.z = (out.s - 1) / std::sqrt(var);
    if (s < 0) out.z = (out.s + 1) / std::sqrt(var);
  }
  boost::math::normal normal;
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(normal, std::abs(out.z)));
  out.tau = out.s / (nd * (nd - 1) / 2.0);
  return out;
}

double chi_square_uniform(const std::vector<long>& counts) {
  if (counts.size() < 2) throw std::invalid_argument("chi-square test needs at least two cells");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total <= 0) throw std::invalid_argument("chi-square test on empty counts");
  const double expected = total / static_cast<double>(counts.size());
  double chi2 = 0;
  for (long c : counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

}  // namespace asn::stats
