#pragma once

#include <cstddef>

namespace datapeck {

// Expected and observed proportions as fractions in [0, 1].
struct ProportionPair {
    double expected = 0.0;
    double observed = 0.0;
};

// Summary of a numeric sample; variance is the unbiased (n-1) estimate.
struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;
};

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

// Standardized mean difference for proportions:
//   (observed - expected) / sqrt((e(1-e) + o(1-o)) / 2)
// Zero when the proportions coincide; throws stat_error when the pooled
// variance degenerates to zero with distinct proportions.
double smd_proportions(const ProportionPair& p);

// Standardized mean difference for means:
//   (mean_b - mean_a) / sqrt((var_a + var_b) / 2)
// Throws stat_error on zero pooled variance.
double smd_means(const SampleStats& a, const SampleStats& b);

// Welch's unequal-variance t statistic with Welch-Satterthwaite degrees of
// freedom and a two-sided p-value. Requires n >= 2 on both sides. When both
// variances are zero: equal means give t = 0, p = 1; distinct means are a
// degenerate input.
WelchResult welch_t(const SampleStats& a, const SampleStats& b);

// Two-sided Student-t tail probability: I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

// observed / expected. Throws ratio_undefined when expected == 0; callers must
// fail the test rather than divide.
double obs_exp_ratio(const ProportionPair& p);

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction with
// relative tolerance 1e-12, switching to 1 - I_{1-x}(b, a) when
// x > (a+1)/(a+b+2) for convergence.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace datapeck
