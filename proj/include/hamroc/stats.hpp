#pragma once

#include <vector>

namespace hamroc {

/// Nearest-rank percentile (p in [0, 100]): the ceil(p/100 * N)-th smallest
/// value, with p = 0 mapping to the minimum.
double percentile(std::vector<double> values, double p);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hamroc
