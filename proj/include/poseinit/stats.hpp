#pragma once

#include <span>

namespace poseinit::stats {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// P(T > t) for Student's t with df degrees of freedom.
double student_t_upper_tail(double t, double df);

struct TTestResult {
    double t = 0.0;
    double p = 0.5;
    int df = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// One-sample test of mean(deltas) > 0 on paired differences:
/// t = mean / (sd / sqrt(n)), p = P(T_{n-1} > t). With zero variance the
/// p value is 0 for a positive mean, 1 for a negative one, and 0.5 at zero.
/// Throws std::invalid_argument for n < 2.
TTestResult paired_one_tailed_ttest(std::span<const double> deltas);

}  // namespace poseinit::stats
