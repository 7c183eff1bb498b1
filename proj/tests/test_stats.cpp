#include "ecmsim/stats.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

using namespace ecmsim;
using stats::SampleSeries;

// ---- contingency ------------------------------------------------------------

TEST(Chi2Contingency, PerfectIndependenceScoresZero) {
    // observed equals expected exactly
    stats::ContingencyTable2x2 table(20, 30, 40, 60);
    for (bool yates : {false, true}) {
        const auto r = stats::chi2_contingency(table, yates);
        EXPECT_DOUBLE_EQ(r.statistic, 0.0);
        EXPECT_DOUBLE_EQ(r.p, 1.0);
    }
}

TEST(Chi2Contingency, ForecastVsSurveyRecipe) {
    // integer-rounded forecast counts against pooled survey totals, Yates on
    stats::ContingencyTable2x2 table(121, 117, 13691, 11172, "forecast", "survey");
    const auto r = stats::chi2_contingency(table, true);
    EXPECT_NEAR(r.statistic, 1.5343309062099675, 1e-9);
    EXPECT_NEAR(r.p, 0.21546361490088095, 1e-9);
    ASSERT_TRUE(r.effect.has_value());
    EXPECT_EQ(r.effect->name, "cramers_v");
    EXPECT_NEAR(r.effect->value, 0.007818330131987622, 1e-12);
}

TEST(Chi2Contingency, HandComputedUncorrectedTable) {
    stats::ContingencyTable2x2 table(10, 20, 20, 10);
    const auto r = stats::chi2_contingency(table, false);
    EXPECT_NEAR(r.statistic, 20.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.p, 0.009823274507519235, 1e-12);
}

// Uncorrected 2x2 chi-squared equals the closed form
// N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)).
TEST(Chi2Contingency, MatchesClosedFormOnSmallIntegerTables) {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> cell(1, 60);
    for (int trial = 0; trial < 300; ++trial) {
        const double a = cell(rng), b = cell(rng), c = cell(rng), d = cell(rng);
        stats::ContingencyTable2x2 table(a, b, c, d);
        const double n = a + b + c + d;
        const double closed =
            n * (a * d - b * c) * (a * d - b * c) /
            ((a + b) * (c + d) * (a + c) * (b + d));
        EXPECT_NEAR(stats::chi2_contingency(table, false).statistic, closed, 1e-9);
    }
}

TEST(Chi2Contingency, DegenerateMarginalsRejected) {
    EXPECT_THROW(stats::ContingencyTable2x2(0, 0, 5, 5), ValidationError);
    EXPECT_THROW(stats::ContingencyTable2x2(0, 5, 0, 5), ValidationError);
}

// ---- ANOVA -------------------------------------------------------------------

TEST(Anova, IdenticalGroupsHaveNoEffect) {
    SampleSeries g{1.0, 2.0, 3.0};
    const auto r = stats::anova_oneway({g, g, g});
    EXPECT_DOUBLE_EQ(r.statistic, 0.0);
    EXPECT_DOUBLE_EQ(r.p, 1.0);
    EXPECT_DOUBLE_EQ(r.effect->value, 0.0);
}

TEST(Anova, PureBetweenVarianceSaturatesEta2) {
    const auto r = stats::anova_oneway({{0.0, 0.0}, {1.0, 1.0}});
    EXPECT_DOUBLE_EQ(r.effect->value, 1.0);
    EXPECT_TRUE(std::isinf(r.statistic));
    EXPECT_DOUBLE_EQ(r.p, 0.0);
}

TEST(Anova, HandComputedThreeGroups) {
    const auto r = stats::anova_oneway({{1.0, 2.0, 3.0}, {2.0, 3.0, 4.0}, {3.0, 4.0, 5.0}});
    EXPECT_NEAR(r.statistic, 3.0, 1e-12);
    EXPECT_NEAR(r.p, 0.125, 1e-12);
    EXPECT_NEAR(r.effect->value, 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(r.df[0], 2.0);
    EXPECT_DOUBLE_EQ(r.df[1], 6.0);
}

TEST(Anova, ZeroTotalVarianceIsAnError) {
    EXPECT_THROW(stats::anova_oneway({{2.0, 2.0}, {2.0, 2.0}}), NumericError);
    EXPECT_THROW(stats::anova_oneway({{1.0, 2.0}}), ValidationError);
    EXPECT_THROW(stats::anova_oneway({{1.0}, {2.0, 3.0}}), ValidationError);
}

// For two groups: F = t^2, and eta2 equals both the squared point-biserial
// correlation and the R^2 of a regression on the group dummy.
TEST(Anova, TwoGroupIdentities) {
    std::mt19937 rng(777);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        SampleSeries a, b;
        const std::size_t na = 5 + trial % 7, nb = 4 + trial % 5;
        for (std::size_t i = 0; i < na; ++i) a.push_back(noise(rng));
        for (std::size_t i = 0; i < nb; ++i) b.push_back(noise(rng) + 0.8);

        const auto anova = stats::anova_oneway({a, b});
        const auto tt = stats::ttest_pooled(a, b);
        EXPECT_NEAR(anova.statistic, tt.statistic * tt.statistic, 1e-10);

        // dummy regression
        const std::size_t n = na + nb;
        linalg::Matrix x(n, 2);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x(i, 0) = 1.0;
            x(i, 1) = i < na ? 0.0 : 1.0;
            y[i] = i < na ? a[i] : b[i - na];
        }
        const auto ols = stats::ols_fit(x, y, {"const", "group"});
        EXPECT_NEAR(anova.effect->value, ols.r2, 1e-12);

        // squared point-biserial correlation
        double my = stats::mean(y);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        const double mx = static_cast<double>(nb) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = x(i, 1) - mx;
            const double dy = y[i] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        const double r_pb = sxy / std::sqrt(sxx * syy);
        EXPECT_NEAR(anova.effect->value, r_pb * r_pb, 1e-12);
    }
}

// ---- t-test and Cohen's d ------------------------------------------------------

TEST(TTest, IdenticalSeries) {
    SampleSeries a{1.0, 2.0, 3.0};
    const auto r = stats::ttest_pooled(a, a);
    EXPECT_DOUBLE_EQ(r.statistic, 0.0);
    EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(TTest, ZeroVarianceIsAnError) {
    EXPECT_THROW(stats::ttest_pooled({0.0, 0.0, 0.0, 0.0}, {1.0, 1.0, 1.0, 1.0}),
                 NumericError);
}

TEST(TTest, HandPooledComputation) {
    const auto r = stats::ttest_pooled({1.0, 2.0, 3.0}, {2.0, 3.0, 4.0});
    EXPECT_NEAR(r.statistic, -1.224744871391589, 1e-12);
    EXPECT_NEAR(r.p, 0.2878641347266908, 1e-12);
    EXPECT_DOUBLE_EQ(r.df[0], 4.0);
}

TEST(CohensD, EqualMeansGiveZero) {
    EXPECT_DOUBLE_EQ(stats::cohens_d_pooled({1.0, 3.0}, {0.0, 4.0}), 0.0);
}

TEST(CohensD, UnitScaledGap) {
    // both spreads s^2 = 2, so the n-weighted pooled SD is sqrt(2); shift by it
    const double s = std::sqrt(2.0);
    EXPECT_NEAR(stats::cohens_d_pooled({-1.0, 1.0}, {-1.0 - s, 1.0 - s}), 1.0, 1e-12);
    EXPECT_THROW(stats::cohens_d_pooled({1.0, 1.0}, {1.0, 1.0}), NumericError);
}

// ---- family correction ----------------------------------------------------------

TEST(FamilyCorrect, BoundariesAndKnownValues) {
    EXPECT_DOUBLE_EQ(stats::family_correct(0.0, 3), 0.0);
    EXPECT_DOUBLE_EQ(stats::family_correct(1.0, 3), 1.0);
    EXPECT_NEAR(stats::family_correct(0.05, 3), 0.142625, 1e-12);
    EXPECT_NEAR(stats::family_correct(0.0169, 3), 0.049847996809, 1e-10);
    EXPECT_DOUBLE_EQ(stats::family_correct_bonferroni(0.4, 3), 1.0);
    EXPECT_DOUBLE_EQ(stats::family_correct_bonferroni(0.01, 3), 0.03);
}

TEST(FamilyCorrect, OrderAndBoundFacts) {
    for (int k : {1, 2, 3, 8}) {
        double prev = -1.0;
        for (int i = 0; i <= 100; ++i) {
            const double p = i / 100.0;
            const double adj = stats::family_correct(p, k);
            EXPECT_GE(adj, p - 1e-15);
            EXPECT_LE(adj, 1.0 + 1e-15);
            EXPECT_LE(adj, k * p + 1e-12);
            EXPECT_GE(adj, prev - 1e-15);  // monotone in p
            prev = adj;
        }
    }
}

// ---- OLS -------------------------------------------------------------------------

TEST(Ols, ExactLinearResponseIsFitPerfectly) {
    linalg::Matrix x(6, 2);
    std::vector<double> y(6);
    for (std::size_t i = 0; i < 6; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = static_cast<double>(i);
        y[i] = 2.0 + 3.0 * static_cast<double>(i);
    }
    const auto r = stats::ols_fit(x, y, {"const", "x"});
    EXPECT_NEAR(r.coefficients[0].estimate, 2.0, 1e-12);
    EXPECT_NEAR(r.coefficients[1].estimate, 3.0, 1e-12);
    EXPECT_NEAR(r.r2, 1.0, 1e-12);
    EXPECT_NEAR(r.sigma2, 0.0, 1e-20);
}

TEST(Ols, ConstantResponseHasNoF) {
    linalg::Matrix x(5, 1, 1.0);
    std::vector<double> y(5, 7.25);
    const auto r = stats::ols_fit(x, y, {"const"});
    EXPECT_NEAR(r.coefficients[0].estimate, 7.25, 1e-12);
    EXPECT_FALSE(r.f_statistic.has_value());
    EXPECT_TRUE(std::isnan(r.r2));
}

TEST(Ols, RankDeficiencyRejected) {
    linalg::Matrix x(5, 2);
    std::vector<double> y(5);
    for (std::size_t i = 0; i < 5; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = 2.0;  // collinear with the intercept
        y[i] = static_cast<double>(i);
    }
    EXPECT_THROW(stats::ols_fit(x, y, {"const", "dup"}), NumericError);
}

TEST(Ols, NormalEquationGradientVanishes) {
    std::mt19937 rng(2024);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t n = 200, k = 4;
    linalg::Matrix x(n, k);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (std::size_t j = 1; j < k; ++j) x(i, j) = noise(rng);
        y[i] = 0.5 + 1.5 * x(i, 1) - 0.7 * x(i, 2) + noise(rng);
    }
    const auto r = stats::ols_fit(x, y, {"const", "a", "b", "c"});
    double grad = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double gj = 0.0, sj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t a = 0; a < k; ++a) fit += x(i, a) * r.coefficients[a].estimate;
            gj += x(i, j) * (y[i] - fit);
            sj += x(i, j) * y[i];
        }
        grad += gj * gj;
        scale += sj * sj;
    }
    EXPECT_LE(std::sqrt(grad), 1e-8 * std::sqrt(scale));
}

// ---- logistic ---------------------------------------------------------------------

namespace {

// Independent maximum-likelihood oracle: iteratively refined 2-d grid search.
std::array<double, 2> grid_search_logistic(const std::vector<double>& xs,
                                           const std::vector<double>& ys) {
    auto loglik = [&](double b0, double b1) {
        double ll = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double eta = b0 + b1 * xs[i];
            ll += ys[i] * eta - std::log1p(std::exp(eta));
        }
        return ll;
    };
    double c0 = 0.0, c1 = 0.0, span = 10.0;
    for (int round = 0; round < 14; ++round) {
        double best = -1e300, b0_best = c0, b1_best = c1;
        for (int i = -20; i <= 20; ++i) {
            for (int j = -20; j <= 20; ++j) {
                const double b0 = c0 + span * i / 20.0;
                const double b1 = c1 + span * j / 20.0;
                const double ll = loglik(b0, b1);
                if (ll > best) {
                    best = ll;
                    b0_best = b0;
                    b1_best = b1;
                }
            }
        }
        c0 = b0_best;
        c1 = b1_best;
        span *= 0.15;
    }
    return {c0, c1};
}

}  // namespace

TEST(Logistic, BalancedInterceptOnlyIsZero) {
    linalg::Matrix x(10, 1, 1.0);
    std::vector<double> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const auto r = stats::logistic_fit(x, y, {"const"});
    EXPECT_NEAR(r.coefficients[0].estimate, 0.0, 1e-12);
    EXPECT_NEAR(r.mcfadden, 0.0, 1e-12);
}

TEST(Logistic, MatchesGridSearchOracle) {
    // x=0: 40 zeros + 10 ones; x=1: 40 ones + 10 zeros
    std::vector<double> xs, ys;
    for (int i = 0; i < 50; ++i) {
        xs.push_back(0.0);
        ys.push_back(i < 10 ? 1.0 : 0.0);
        xs.push_back(1.0);
        ys.push_back(i < 10 ? 0.0 : 1.0);
    }
    linalg::Matrix x(xs.size(), 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = xs[i];
    }
    const auto fit = stats::logistic_fit(x, ys, {"const", "x"});
    const auto oracle = grid_search_logistic(xs, ys);
    EXPECT_NEAR(fit.coefficients[0].estimate, oracle[0], 1e-6);
    EXPECT_NEAR(fit.coefficients[1].estimate, oracle[1], 1e-6);
    // saturated two-cell model has a closed form to pin both routes down
    EXPECT_NEAR(fit.coefficients[0].estimate, std::log(10.0 / 40.0), 1e-9);
    EXPECT_NEAR(fit.coefficients[1].estimate, std::log(40.0 / 10.0) - std::log(10.0 / 40.0),
                1e-9);
}

TEST(Logistic, ScoreEquationsHoldAtOptimum) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    const std::size_t n = 300;
    linalg::Matrix x(n, 3);
    std::vector<double> y(n);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = unif(rng);
        x(i, 2) = unif(rng);
        const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.9 * x(i, 1) - 1.2 * x(i, 2))));
        y[i] = coin(rng) < p ? 1.0 : 0.0;
    }
    const auto fit = stats::logistic_fit(x, y, {"const", "a", "b"});
    double norm = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t a = 0; a < 3; ++a) eta += x(i, a) * fit.coefficients[a].estimate;
            g += x(i, j) * (y[i] - 1.0 / (1.0 + std::exp(-eta)));
        }
        norm += g * g;
    }
    EXPECT_LE(std::sqrt(norm), 1e-8);
}

TEST(Logistic, CompleteSeparationReported) {
    linalg::Matrix x(8, 2);
    std::vector<double> y(8);
    for (std::size_t i = 0; i < 8; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = static_cast<double>(i);
        y[i] = i < 4 ? 0.0 : 1.0;
    }
    EXPECT_THROW(stats::logistic_fit(x, y, {"const", "x"}), NumericError);
}

// ---- threshold scan -----------------------------------------------------------------

TEST(ThresholdScan, FindsLargestContiguousPassingPeriod) {
    const std::vector<int> periods{2, 3, 4, 5, 6, 7};
    const std::vector<double> eta2{0.5, 0.4, 0.2, 0.15, 0.1, 0.05};
    const auto hit = stats::scan_threshold(
        periods, eta2, {stats::ThresholdKind::eta2_at_least, 0.14}, 1.5);
    ASSERT_TRUE(hit.has_value());
    EXPECT_EQ(hit->period_steps, 5);
    EXPECT_DOUBLE_EQ(hit->months, 7.5);
    EXPECT_DOUBLE_EQ(hit->boundary_value, 0.15);
    EXPECT_DOUBLE_EQ(*hit->first_failing, 0.1);
    EXPECT_TRUE(hit->warnings.empty());
}

TEST(ThresholdScan, UnsatisfiableThresholdReturnsNone) {
    const auto hit = stats::scan_threshold({2, 3}, {0.9, 0.8},
                                           {stats::ThresholdKind::eta2_at_least, 1.1}, 1.5);
    EXPECT_FALSE(hit.has_value());
}

TEST(ThresholdScan, NonMonotonicRegionsWarn) {
    const std::vector<int> periods{2, 3, 4, 5};
    const std::vector<double> p{0.01, 0.2, 0.01, 0.2};
    const auto hit = stats::scan_threshold(
        periods, p, {stats::ThresholdKind::corrected_p_below, 0.05}, 1.5);
    ASSERT_TRUE(hit.has_value());
    EXPECT_EQ(hit->period_steps, 2);
    ASSERT_EQ(hit->warnings.size(), 1u);
    EXPECT_NE(hit->warnings[0].find("period 4"), std::string::npos);
}
