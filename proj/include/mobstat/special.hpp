#pragma once

namespace mobstat::stats {

double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b), via Lentz continued fractions with
/// the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) applied past the mean.
double incomplete_beta(double a, double b, double x);

/// Smallest x in [0,1] with I_x(a, b) >= p.
double incomplete_beta_inverse(double a, double b, double p);

double digamma(double x);
double trigamma(double x);

double normal_cdf(double z);

}  // namespace mobstat::stats
