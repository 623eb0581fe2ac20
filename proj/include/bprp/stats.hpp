#pragma once

#include <span>
#include <vector>

namespace bprp::stats {

double normal_pdf(double z);
// Upper tail 1 - Phi(z), computed through erfc so it stays accurate for large z.
double normal_upper_tail(double z);
double normal_cdf(double z);

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sd(std::span<const double> xs);
double median(std::vector<double> xs);
// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);
std::vector<double> ranks(std::span<const double> xs);
double spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace bprp::stats
