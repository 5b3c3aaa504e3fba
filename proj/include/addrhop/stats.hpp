#pragma once

#include <span>
#include <vector>

namespace addrhop {

// Upper tail P(X >= chi2) of the chi-square distribution with dof degrees of freedom.
double chi_square_upper_tail(double chi2, double dof);

// Biased sample autocorrelation r_k = c_k / c_0, k = 0..max_lag.
std::vector<double> sample_autocorrelation(std::span<const double> xs, unsigned max_lag);

}  // namespace addrhop
