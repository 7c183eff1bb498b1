#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ecmsim/errors.hpp"
#include "ecmsim/linalg.hpp"
#include "ecmsim/specfun.hpp"

// Inferential statistics used by the analysis pipeline: contingency tests,
// one-way ANOVA with eta-squared, pooled t-tests, Cohen's d, family-wise
// p corrections, OLS and IRLS logistic regression, and the frequency
// threshold scan.
//
// Conventions: sample standard deviations use the n-1 denominator; Cohen's d
// pools variances with n weights (not n-1), matching the upstream analysis
// this reproduces.

namespace ecmsim::stats {

using SampleSeries = std::vector<double>;

inline double mean(const SampleSeries& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    return m / static_cast<double>(xs.size());
}

inline double sample_variance(const SampleSeries& xs) {
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

struct EffectSize {
    std::string name;
    double value;
};

struct TestResult {
    std::string test;
    double statistic = 0.0;
    std::vector<double> df;
    double p = 1.0;
    std::optional<EffectSize> effect;
};

// ---- survival-function dispatcher ------------------------------------------

enum class Dist { chi2, t, f, normal };

inline double dist_sf(Dist kind, double x, double df1 = 0.0, double df2 = 0.0) {
    switch (kind) {
        case Dist::chi2: return specfun::chi2_sf(x, df1);
        case Dist::t: return specfun::t_sf(x, df1);
        case Dist::f: return specfun::f_sf(x, df1, df2);
        case Dist::normal: return specfun::normal_sf(x);
    }
    throw ValidationError("unknown distribution kind");
}

// ---- contingency -----------------------------------------------------------

class ContingencyTable2x2 {
public:
    ContingencyTable2x2(double o11, double o12, double o21, double o22,
                        std::string row1 = "row1", std::string row2 = "row2")
        : o_{o11, o12, o21, o22}, rows_{std::move(row1), std::move(row2)} {
        for (double v : o_) {
            if (!(v >= 0.0)) throw ValidationError("contingency cells must be >= 0");
        }
        if (!(total() > 0.0)) throw ValidationError("contingency table is empty");
        if (o_[0] + o_[1] == 0.0 || o_[2] + o_[3] == 0.0) {
            throw ValidationError("contingency table has an all-zero row");
        }
        if (o_[0] + o_[2] == 0.0 || o_[1] + o_[3] == 0.0) {
            throw ValidationError("contingency table has an all-zero column");
        }
    }

    double at(std::size_t r, std::size_t c) const { return o_[r * 2 + c]; }
    double row_sum(std::size_t r) const { return o_[r * 2] + o_[r * 2 + 1]; }
    double col_sum(std::size_t c) const { return o_[c] + o_[2 + c]; }
    double total() const { return o_[0] + o_[1] + o_[2] + o_[3]; }
    const std::string& row_label(std::size_t r) const { return rows_[r]; }

private:
    double o_[4];
    std::string rows_[2];
};

// Pearson chi-squared on a 2x2 with optional Yates continuity correction;
// Cramer's V rides along as the effect size.
inline TestResult chi2_contingency(const ContingencyTable2x2& table, bool yates) {
    const double n = table.total();
    const double correction = yates ? 0.5 : 0.0;
    double chi2 = 0.0;
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double expected = table.row_sum(r) * table.col_sum(c) / n;
            const double d = std::max(0.0, std::abs(table.at(r, c) - expected) - correction);
            chi2 += d * d / expected;
        }
    }
    TestResult result{"chi2_contingency", chi2, {1.0}, specfun::chi2_sf(chi2, 1.0),
                      EffectSize{"cramers_v", std::sqrt(chi2 / n)}};
    return result;
}

// ---- ANOVA and mean comparisons ---------------------------------------------

inline TestResult anova_oneway(const std::vector<SampleSeries>& groups) {
    if (groups.size() < 2) throw ValidationError("ANOVA needs >= 2 groups");
    std::size_t n_total = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw ValidationError("every ANOVA group needs >= 2 points");
        n_total += g.size();
    }
    double grand = 0.0;
    for (const auto& g : groups)
        for (double x : g) grand += x;
    grand /= static_cast<double>(n_total);

    double ss_between = 0.0;
    double ss_within = 0.0;
    for (const auto& g : groups) {
        const double gm = mean(g);
        ss_between += static_cast<double>(g.size()) * (gm - grand) * (gm - grand);
        for (double x : g) ss_within += (x - gm) * (x - gm);
    }
    const double ss_total = ss_between + ss_within;
    if (ss_total <= 0.0) {
        throw NumericError("ANOVA is undefined: zero total variance");
    }
    const double k = static_cast<double>(groups.size());
    const double df1 = k - 1.0;
    const double df2 = static_cast<double>(n_total) - k;
    const double eta2 = ss_between / ss_total;

    double f_stat;
    double p;
    if (ss_within == 0.0) {
        f_stat = std::numeric_limits<double>::infinity();
        p = 0.0;
    } else {
        f_stat = (ss_between / df1) / (ss_within / df2);
        p = specfun::f_sf(f_stat, df1, df2);
    }
    return {"anova_oneway", f_stat, {df1, df2}, p, EffectSize{"eta2", eta2}};
}

// Equal-variance two-sample t-test.
inline TestResult ttest_pooled(const SampleSeries& a, const SampleSeries& b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test needs >= 2 per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double sp2 =
        ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) /
        (na + nb - 2.0);
    if (sp2 <= 0.0) throw NumericError("t-test is undefined: zero pooled variance");
    const double t = (mean(a) - mean(b)) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    const double df = na + nb - 2.0;
    return {"ttest_pooled", t, {df}, 2.0 * specfun::t_sf(std::abs(t), df), std::nullopt};
}

// Standardized mean difference with n-weighted variance pooling:
// d = (mean_a - mean_b) / sqrt((s_a^2 n_a + s_b^2 n_b) / (n_a + n_b)).
inline double cohens_d_pooled(const SampleSeries& a, const SampleSeries& b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("Cohen's d needs >= 2 per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double pooled =
        std::sqrt((sample_variance(a) * na + sample_variance(b) * nb) / (na + nb));
    if (pooled <= 0.0) throw NumericError("Cohen's d is undefined: zero pooled spread");
    return (mean(a) - mean(b)) / pooled;
}

// ---- family-wise correction --------------------------------------------------

// adjusted = 1 - (1 - p)^k
inline double family_correct(double p, int k) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0,1]");
    if (k < 1) throw ValidationError("family size k must be >= 1");
    return 1.0 - std::pow(1.0 - p, k);
}

// strict Bonferroni variant, min(1, k*p)
inline double family_correct_bonferroni(double p, int k) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0,1]");
    if (k < 1) throw ValidationError("family size k must be >= 1");
    return std::min(1.0, static_cast<double>(k) * p);
}

// ---- regression ----------------------------------------------------------------

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    double statistic = 0.0;  // t for OLS, Wald z for logistic
    double p = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> standardized;  // z-scored-X-and-y slope, OLS only
};

struct OlsResult {
    std::vector<Coefficient> coefficients;
    std::size_t n = 0;
    double df_resid = 0.0;
    double sigma2 = 0.0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    std::optional<double> f_statistic;  // absent for slope-free or zero-variance fits
    double f_df1 = 0.0;
    double f_df2 = 0.0;
    double f_p = 1.0;
    linalg::Matrix covariance;
};

// Least squares through the normal equations with a pivoted solve.
// The design matrix is expected to carry its intercept column explicitly.
inline OlsResult ols_fit(const linalg::Matrix& x, const std::vector<double>& y,
                         const std::vector<std::string>& names,
                         bool standardized = false, double ci_level = 0.95) {
    const std::size_t n = x.rows();
    const std::size_t k = x.cols();
    if (y.size() != n || names.size() != k) throw ValidationError("ols_fit: shape mismatch");
    if (n <= k) throw ValidationError("ols_fit needs more rows than columns");

    linalg::Matrix xtx(k, k);
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            xty[a] += x(i, a) * y[i];
            for (std::size_t b = a; b < k; ++b) xtx(a, b) += x(i, a) * x(i, b);
        }
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) xtx(a, b) = xtx(b, a);

    auto beta = linalg::solve(xtx, xty);
    if (!beta) throw NumericError("ols_fit: design matrix is rank deficient");

    double sse = 0.0;
    double sum_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t a = 0; a < k; ++a) fit += x(i, a) * (*beta)[a];
        sse += (y[i] - fit) * (y[i] - fit);
        sum_y += y[i];
    }
    const double y_mean = sum_y / static_cast<double>(n);
    double sst = 0.0;
    for (double v : y) sst += (v - y_mean) * (v - y_mean);

    OlsResult result;
    result.n = n;
    result.df_resid = static_cast<double>(n - k);
    result.sigma2 = sse / result.df_resid;

    auto inv = linalg::invert(xtx);
    if (!inv) throw NumericError("ols_fit: normal equations singular");
    result.covariance = linalg::Matrix(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            result.covariance(a, b) = result.sigma2 * (*inv)(a, b);

    const double tq = specfun::t_quantile_upper((1.0 - ci_level) / 2.0, result.df_resid);
    double sd_y = sst > 0.0 ? std::sqrt(sst / static_cast<double>(n - 1)) : 0.0;
    result.coefficients.reserve(k);
    for (std::size_t a = 0; a < k; ++a) {
        Coefficient c;
        c.name = names[a];
        c.estimate = (*beta)[a];
        c.se = std::sqrt(result.covariance(a, a));
        c.statistic = c.se > 0.0 ? c.estimate / c.se
                                 : std::numeric_limits<double>::infinity();
        c.p = c.se > 0.0 ? 2.0 * specfun::t_sf(std::abs(c.statistic), result.df_resid)
                         : 0.0;
        c.ci_low = c.estimate - tq * c.se;
        c.ci_high = c.estimate + tq * c.se;
        if (standardized && sd_y > 0.0) {
            double sx_ss = 0.0;
            double sx_mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) sx_mean += x(i, a);
            sx_mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                sx_ss += (x(i, a) - sx_mean) * (x(i, a) - sx_mean);
            }
            if (sx_ss > 0.0) {
                c.standardized =
                    c.estimate * std::sqrt(sx_ss / static_cast<double>(n - 1)) / sd_y;
            }
        }
        result.coefficients.push_back(std::move(c));
    }

    if (sst > 0.0) {
        result.r2 = 1.0 - sse / sst;
        result.adj_r2 = 1.0 - (1.0 - result.r2) * static_cast<double>(n - 1) /
                                  result.df_resid;
        if (k > 1 && result.sigma2 > 0.0) {
            const double ssr = sst - sse;
            result.f_df1 = static_cast<double>(k - 1);
            result.f_df2 = result.df_resid;
            result.f_statistic = (ssr / result.f_df1) / result.sigma2;
            result.f_p = specfun::f_sf(*result.f_statistic, result.f_df1, result.f_df2);
        }
    } else {
        // constant response: slope-free fit, F undefined
        result.r2 = std::numeric_limits<double>::quiet_NaN();
        result.adj_r2 = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

struct LogisticResult {
    std::vector<Coefficient> coefficients;
    std::size_t n = 0;
    int iterations = 0;
    double log_lik = 0.0;
    double null_log_lik = 0.0;
    double model_chi2 = 0.0;
    double model_df = 0.0;
    double model_p = 1.0;
    double mcfadden = 0.0;
    linalg::Matrix covariance;

    // Wald test of an arbitrary coefficient contrast c'beta.
    Coefficient contrast(const std::vector<double>& c, const std::string& name) const {
        if (c.size() != coefficients.size()) {
            throw ValidationError("contrast length mismatch");
        }
        double est = 0.0;
        double var = 0.0;
        for (std::size_t a = 0; a < c.size(); ++a) {
            est += c[a] * coefficients[a].estimate;
            for (std::size_t b = 0; b < c.size(); ++b) {
                var += c[a] * covariance(a, b) * c[b];
            }
        }
        Coefficient out;
        out.name = name;
        out.estimate = est;
        out.se = std::sqrt(var);
        out.statistic = est / out.se;
        out.p = 2.0 * specfun::normal_sf(std::abs(out.statistic));
        const double zq = specfun::normal_quantile_upper(0.025);
        out.ci_low = est - zq * out.se;
        out.ci_high = est + zq * out.se;
        return out;
    }
};

// Newton / IRLS maximum likelihood for binary outcomes. Converges when the
// score (gradient) drops below tol in the max norm; complete separation shows
// up as non-convergence or a singular information matrix and is reported.
inline LogisticResult logistic_fit(const linalg::Matrix& x, const std::vector<double>& y,
                                   const std::vector<std::string>& names,
                                   int max_iter = 100, double tol = 1e-10) {
    const std::size_t n = x.rows();
    const std::size_t k = x.cols();
    if (y.size() != n || names.size() != k) {
        throw ValidationError("logistic_fit: shape mismatch");
    }
    double y_sum = 0.0;
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw ValidationError("logistic response must be 0/1");
        y_sum += v;
    }
    if (y_sum == 0.0 || y_sum == static_cast<double>(n)) {
        throw ValidationError("logistic response is constant");
    }

    std::vector<double> beta(k, 0.0);
    std::vector<double> mu(n);
    linalg::Matrix info(k, k);
    bool converged = false;
    int used_iterations = 0;

    for (int iter = 0; iter < max_iter && !converged; ++iter) {
        std::vector<double> grad(k, 0.0);
        info = linalg::Matrix(k, k);
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t a = 0; a < k; ++a) eta += x(i, a) * beta[a];
            mu[i] = 1.0 / (1.0 + std::exp(-eta));
            const double w = mu[i] * (1.0 - mu[i]);
            for (std::size_t a = 0; a < k; ++a) {
                grad[a] += x(i, a) * (y[i] - mu[i]);
                for (std::size_t b = a; b < k; ++b) {
                    info(a, b) += x(i, a) * x(i, b) * w;
                }
            }
        }
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < a; ++b) info(a, b) = info(b, a);

        double grad_norm = 0.0;
        for (double g : grad) grad_norm = std::max(grad_norm, std::abs(g));
        used_iterations = iter + 1;
        if (grad_norm <= tol) {
            converged = true;
            break;
        }
        auto step_vec = linalg::solve(info, grad);
        if (!step_vec) {
            throw NumericError(
                "logistic_fit: singular information matrix (complete separation?)");
        }
        for (std::size_t a = 0; a < k; ++a) beta[a] += (*step_vec)[a];
    }
    if (!converged) {
        throw NumericError("logistic_fit did not converge in " +
                           std::to_string(max_iter) +
                           " iterations (complete separation?)");
    }
    // under complete separation the score also vanishes, but only because the
    // coefficients have run off toward infinity
    for (double b : beta) {
        if (std::abs(b) > 30.0) {
            throw NumericError(
                "logistic_fit: diverged coefficients indicate complete separation");
        }
    }

    LogisticResult result;
    result.n = n;
    result.iterations = used_iterations;

    auto inv = linalg::invert(info);
    if (!inv) throw NumericError("logistic_fit: singular information matrix");
    result.covariance = *inv;

    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::clamp(mu[i], 1e-15, 1.0 - 1e-15);
        ll += y[i] * std::log(m) + (1.0 - y[i]) * std::log(1.0 - m);
    }
    const double p0 = y_sum / static_cast<double>(n);
    result.log_lik = ll;
    result.null_log_lik =
        static_cast<double>(n) * (p0 * std::log(p0) + (1.0 - p0) * std::log(1.0 - p0));
    result.model_chi2 = 2.0 * (result.log_lik - result.null_log_lik);
    result.model_df = static_cast<double>(k - 1);
    result.model_p = result.model_df > 0.0
                         ? specfun::chi2_sf(result.model_chi2, result.model_df)
                         : 1.0;
    result.mcfadden = 1.0 - result.log_lik / result.null_log_lik;

    const double zq = specfun::normal_quantile_upper(0.025);
    result.coefficients.reserve(k);
    for (std::size_t a = 0; a < k; ++a) {
        Coefficient c;
        c.name = names[a];
        c.estimate = beta[a];
        c.se = std::sqrt(result.covariance(a, a));
        c.statistic = c.estimate / c.se;
        c.p = 2.0 * specfun::normal_sf(std::abs(c.statistic));
        c.ci_low = c.estimate - zq * c.se;
        c.ci_high = c.estimate + zq * c.se;
        result.coefficients.push_back(std::move(c));
    }
    return result;
}

// ---- frequency threshold scan ---------------------------------------------------

enum class ThresholdKind { eta2_at_least, corrected_p_below, cohens_d_at_least };

struct ThresholdCriterion {
    ThresholdKind kind;
    double threshold;

    bool satisfied_by(double value) const {
        switch (kind) {
            case ThresholdKind::eta2_at_least: return value >= threshold;
            case ThresholdKind::corrected_p_below: return value < threshold;
            case ThresholdKind::cohens_d_at_least: return value >= threshold;
        }
        return false;
    }

    std::string describe() const {
        switch (kind) {
            case ThresholdKind::eta2_at_least: return "eta2 >= " + std::to_string(threshold);
            case ThresholdKind::corrected_p_below:
                return "corrected p < " + std::to_string(threshold);
            case ThresholdKind::cohens_d_at_least:
                return "cohens_d >= " + std::to_string(threshold);
        }
        return "?";
    }
};

struct ThresholdHit {
    int period_steps;
    double months;
    double boundary_value;                 // statistic at the reported period
    std::optional<double> first_failing;   // statistic one period later, if any
    std::vector<std::string> warnings;     // non-monotonic regions beyond the scan
};

// Largest period whose statistic still satisfies the criterion, scanning an
// ascending grid from its least period. The reported period ends the
// contiguous passing prefix; later isolated passes only produce warnings.
// Out-of-reach thresholds are allowed and simply never satisfied.
inline std::optional<ThresholdHit> scan_threshold(const std::vector<int>& periods,
                                                  const std::vector<double>& values,
                                                  const ThresholdCriterion& criterion,
                                                  double dt_months) {
    if (periods.empty() || periods.size() != values.size()) {
        throw ValidationError("threshold scan needs one statistic per period");
    }
    if (!std::isfinite(criterion.threshold)) {
        throw ValidationError("criterion threshold must be finite");
    }
    if (criterion.kind == ThresholdKind::corrected_p_below &&
        !(criterion.threshold > 0.0 && criterion.threshold <= 1.0)) {
        throw ValidationError("a p-value threshold must lie in (0, 1]");
    }
    if (criterion.kind != ThresholdKind::corrected_p_below && criterion.threshold < 0.0) {
        throw ValidationError("effect-size thresholds must be nonnegative");
    }
    if (!criterion.satisfied_by(values.front())) return std::nullopt;

    std::size_t last_pass = 0;
    while (last_pass + 1 < periods.size() &&
           criterion.satisfied_by(values[last_pass + 1])) {
        ++last_pass;
    }
    ThresholdHit hit{periods[last_pass], periods[last_pass] * dt_months,
                     values[last_pass], std::nullopt, {}};
    if (last_pass + 1 < periods.size()) hit.first_failing = values[last_pass + 1];
    for (std::size_t i = last_pass + 1; i < periods.size(); ++i) {
        if (criterion.satisfied_by(values[i])) {
            hit.warnings.push_back("criterion " + criterion.describe() +
                                   " holds again at period " +
                                   std::to_string(periods[i]) +
                                   " beyond a failing region");
        }
    }
    return hit;
}

}  // namespace ecmsim::stats
