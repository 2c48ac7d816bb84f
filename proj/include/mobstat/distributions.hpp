#pragma once

namespace mobstat::stats {

enum class DistKind { f, student_t };

/// Degrees of freedom. df2 is only read for the F distribution.
struct DistParams {
  double df1 = 1.0;
  double df2 = 1.0;
};

double dist_cdf(DistKind kind, DistParams params, double x);
double dist_pdf(DistKind kind, DistParams params, double x);
double dist_quantile(DistKind kind, DistParams params, double q);

double f_cdf(double x, double d1, double d2);
/// Upper tail 1 - F_cdf, computed without cancellation.
double f_sf(double x, double d1, double d2);
double f_pdf(double x, double d1, double d2);

double t_cdf(double x, double df);
double t_pdf(double x, double df);
/// P(|T| >= |t|).
double t_two_sided_p(double t, double df);

}  // namespace mobstat::stats
