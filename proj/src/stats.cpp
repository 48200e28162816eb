#include "datapeck/stats.hpp"

#include <cmath>
#include <string>

#include "datapeck/errors.hpp"

namespace datapeck {

namespace {

constexpr double kBetaTolerance = 1e-12;
constexpr int kBetaMaxIterations = 500;
constexpr double kTiny = 1e-300;

void check_proportion(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw stat_error(std::string(name) + " proportion outside [0, 1]: " + std::to_string(v));
}

void check_sample(const SampleStats& s, const char* name) {
    if (s.n < 2) throw stat_error(std::string(name) + ": sample size must be at least 2");
    if (!std::isfinite(s.mean)) throw stat_error(std::string(name) + ": non-finite mean");
    if (!std::isfinite(s.variance) || s.variance < 0.0)
        throw stat_error(std::string(name) + ": variance must be finite and non-negative");
}

// Continued fraction for the incomplete beta (Lentz's method).
double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kBetaMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kBetaTolerance) return h;
    }
    throw stat_error("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw stat_error("incomplete beta: a and b must be positive");
    if (!std::isfinite(x) || x < 0.0 || x > 1.0)
        throw stat_error("incomplete beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double smd_proportions(const ProportionPair& p) {
    check_proportion(p.expected, "expected");
    check_proportion(p.observed, "observed");
    const double pooled = (p.expected * (1.0 - p.expected) + p.observed * (1.0 - p.observed)) / 2.0;
    if (pooled == 0.0) {
        if (p.expected == p.observed) return 0.0;
        throw stat_error("smd_proportions: zero pooled variance with distinct proportions");
    }
    return (p.observed - p.expected) / std::sqrt(pooled);
}

double smd_means(const SampleStats& a, const SampleStats& b) {
    check_sample(a, "smd_means: first sample");
    check_sample(b, "smd_means: second sample");
    const double pooled = (a.variance + b.variance) / 2.0;
    if (pooled == 0.0) throw stat_error("smd_means: zero pooled variance");
    return (b.mean - a.mean) / std::sqrt(pooled);
}

WelchResult welch_t(const SampleStats& a, const SampleStats& b) {
    check_sample(a, "welch_t: first sample");
    check_sample(b, "welch_t: second sample");
    if (a.variance == 0.0 && b.variance == 0.0) {
        if (a.mean == b.mean)
            return WelchResult{0.0, static_cast<double>(a.n + b.n - 2), 1.0};
        throw stat_error("welch_t: zero variance on both sides with distinct means");
    }
    const double sa = a.variance / static_cast<double>(a.n);
    const double sb = b.variance / static_cast<double>(b.n);
    const double se2 = sa + sb;
    const double t = (a.mean - b.mean) / std::sqrt(se2);
    const double df = se2 * se2 / (sa * sa / static_cast<double>(a.n - 1) +
                                   sb * sb / static_cast<double>(b.n - 1));
    return WelchResult{t, df, student_t_two_sided_p(t, df)};
}

double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) throw stat_error("student_t_two_sided_p: non-finite t");
    if (!std::isfinite(df) || df <= 0.0)
        throw stat_error("student_t_two_sided_p: degrees of freedom must be positive");
    if (t == 0.0) return 1.0;
    const double x = df / (df + t * t);
    return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

double obs_exp_ratio(const ProportionPair& p) {
    check_proportion(p.expected, "expected");
    check_proportion(p.observed, "observed");
    if (p.expected == 0.0)
        throw ratio_undefined("obs_exp_ratio: expected proportion is zero; ratio undefined");
    return p.observed / p.expected;
}

}  // namespace datapeck
