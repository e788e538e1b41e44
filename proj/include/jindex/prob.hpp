#pragma once

#include <string>

namespace jindex::prob {

double normal_cdf(double x);

/// Regularized lower incomplete gamma P(a, x).
double reg_lower_gamma(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

/// Upper tail of the chi-squared distribution with df degrees of freedom.
double chi_squared_sf(double x, double df);

/// Upper tail of the F distribution.
double f_sf(double x, double df1, double df2);

/// Two-sided p-value of a Student-t statistic.
double student_t_two_sided_p(double t, double df);

/// Significance stars: * p<0.1, ** p<0.05, *** p<0.01.
std::string stars_for_p(double p);

}  // namespace jindex::prob
