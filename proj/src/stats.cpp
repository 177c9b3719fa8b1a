#include "poseinit/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace poseinit::stats {

namespace {

// Continued fraction for I_x(a, b), modified Lentz's method. Converges
// quickly for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            break;
        }
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("incomplete_beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("incomplete_beta: x must lie in [0, 1]");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_upper_tail(double t, double df) {
    if (!(df > 0.0)) {
        throw std::invalid_argument("student_t_upper_tail: df must be positive");
    }
    if (std::isinf(t)) {
        return t > 0.0 ? 0.0 : 1.0;
    }
    // P(|T| > |t|) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    const double two_sided = incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t >= 0.0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
}

TTestResult paired_one_tailed_ttest(std::span<const double> deltas) {
    const std::size_t n = deltas.size();
    if (n < 2) {
        throw std::invalid_argument("paired t-test needs at least two differences");
    }
    double mean = 0.0;
    for (double d : deltas) {
        mean += d;
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double d : deltas) {
        ss += (d - mean) * (d - mean);
    }
    TTestResult r;
    r.df = static_cast<int>(n) - 1;
    r.mean = mean;
    r.sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (r.sd == 0.0) {
        if (mean > 0.0) {
            r.t = std::numeric_limits<double>::infinity();
            r.p = 0.0;
        } else if (mean < 0.0) {
            r.t = -std::numeric_limits<double>::infinity();
            r.p = 1.0;
        } else {
            r.t = 0.0;
            r.p = 0.5;
        }
        return r;
    }
    r.t = mean / (r.sd / std::sqrt(static_cast<double>(n)));
    r.p = student_t_upper_tail(r.t, r.df);
    return r;
}

}  // namespace poseinit::stats
