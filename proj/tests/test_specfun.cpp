#include "ecmsim/specfun.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support/quadrature_oracle.hpp"

using namespace ecmsim;

TEST(SurvivalFunctions, BoundaryValues) {
    EXPECT_DOUBLE_EQ(specfun::chi2_sf(0.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(specfun::chi2_sf(0.0, 100.0), 1.0);
    EXPECT_DOUBLE_EQ(specfun::f_sf(0.0, 3.0, 7.0), 1.0);
    EXPECT_DOUBLE_EQ(specfun::t_sf(0.0, 5.0), 0.5);
    EXPECT_DOUBLE_EQ(specfun::normal_sf(0.0), 0.5);
    EXPECT_THROW(specfun::chi2_sf(1.0, 0.0), ValidationError);
    EXPECT_THROW(specfun::t_sf(1.0, -2.0), ValidationError);
    EXPECT_THROW(specfun::f_sf(1.0, 0.0, 3.0), ValidationError);
}

TEST(SurvivalFunctions, SpotValuesAgainstIndependentReferences) {
    // frozen from an independent implementation
    EXPECT_NEAR(specfun::chi2_sf(1.534, 1.0), 0.21551310736652413, 1e-12);
    EXPECT_NEAR(specfun::chi2_sf(20.0 / 3.0, 1.0), 0.009823274507519235, 1e-12);
    EXPECT_NEAR(specfun::t_sf(1.224744871391589, 4.0), 0.1439320673633454, 1e-12);
    EXPECT_NEAR(specfun::t_sf(2.0, 10.0), 0.036694017385370196, 1e-12);
    EXPECT_NEAR(specfun::f_sf(3.5, 4.0, 14795.0), 0.0073131867344640175, 1e-12);
    EXPECT_NEAR(specfun::normal_sf(1.96), 0.024997895148220435, 1e-13);
    EXPECT_NEAR(specfun::chi2_sf(71.2935296408773, 3.0), 2.2554864470208105e-15, 1e-24);
    EXPECT_NEAR(specfun::chi2_sf(11131.0, 10000.0), 5.862370095545667e-15, 1e-22);
    EXPECT_NEAR(specfun::t_sf(-8.0, 1.0), 0.9604165758394345, 1e-12);
    EXPECT_NEAR(specfun::t_sf(8.0, 10000.0), 6.910604364532643e-16, 1e-24);
    EXPECT_NEAR(specfun::f_sf(8.0, 1.0, 1.0), 0.21634689593878553, 1e-12);
}

TEST(SurvivalFunctions, TSymmetryIdentity) {
    for (double df : {1.0, 3.0, 17.0, 240.0}) {
        for (double x : {0.0, 0.3, 1.7, 6.0}) {
            EXPECT_NEAR(specfun::t_sf(x, df) + specfun::t_sf(-x, df), 1.0, 1e-14);
        }
    }
}

TEST(SurvivalFunctions, MonotoneNonincreasing) {
    auto check = [](auto sf) {
        double prev = 2.0;
        for (double x = 0.0; x <= 40.0; x += 0.25) {
            const double v = sf(x);
            EXPECT_LE(v, prev + 1e-15);
            prev = v;
        }
    };
    check([](double x) { return specfun::chi2_sf(x, 3.0); });
    check([](double x) { return specfun::t_sf(x - 20.0, 7.0); });
    check([](double x) { return specfun::f_sf(x, 5.0, 9.0); });
    check([](double x) { return specfun::normal_sf(x - 20.0); });
}

// Cross-check against the quadrature oracle on a moderate grid; the
// acceptance suite runs the full ten-thousand-point version.
TEST(SurvivalFunctions, QuadratureOracleSpotGrid) {
    for (double df : {1.0, 2.0, 7.0, 100.0, 10000.0}) {
        const double sigma = std::sqrt(2.0 * df);
        for (int i = 0; i <= 40; ++i) {
            const double x = std::max(0.0, df - 8.0 * sigma) +
                             (df + 8.0 * sigma - std::max(0.0, df - 8.0 * sigma)) * i / 40.0;
            const double got = specfun::chi2_sf(x, df);
            const double want = static_cast<double>(oracle::chi2_sf(x, df));
            EXPECT_NEAR(got, want, 1e-10) << "chi2 df=" << df << " x=" << x;
        }
    }
    for (double df : {1.0, 2.0, 5.0, 30.0, 10000.0}) {
        for (int i = 0; i <= 40; ++i) {
            const double x = -10.0 + 20.0 * i / 40.0;
            EXPECT_NEAR(specfun::t_sf(x, df), static_cast<double>(oracle::t_sf(x, df)),
                        1e-10)
                << "t df=" << df << " x=" << x;
        }
    }
    for (auto [d1, d2] : std::vector<std::pair<double, double>>{
             {1.0, 1.0}, {2.0, 10.0}, {4.0, 14795.0}, {50.0, 50.0}}) {
        for (int i = 1; i <= 30; ++i) {
            const double x = 12.0 * i / 30.0;
            EXPECT_NEAR(specfun::f_sf(x, d1, d2),
                        static_cast<double>(oracle::f_sf(x, d1, d2)), 1e-10)
                << "F " << d1 << "," << d2 << " x=" << x;
        }
    }
    for (int i = 0; i <= 64; ++i) {
        const double x = -8.0 + 16.0 * i / 64.0;
        EXPECT_NEAR(specfun::normal_sf(x), static_cast<double>(oracle::normal_sf(x)),
                    1e-12)
            << "normal x=" << x;
    }
}

TEST(Quantiles, InvertTheirSurvivalFunctions) {
    for (double p : {0.4, 0.1, 0.025, 0.005, 1e-6}) {
        const double z = specfun::normal_quantile_upper(p);
        EXPECT_NEAR(specfun::normal_sf(z), p, 1e-12);
        for (double df : {1.0, 4.0, 100.0, 14795.0}) {
            const double t = specfun::t_quantile_upper(p, df);
            EXPECT_NEAR(specfun::t_sf(t, df), p, 1e-11) << "df=" << df;
        }
    }
    EXPECT_NEAR(specfun::t_quantile_upper(0.025, 14795.0), 1.9601243402018178, 1e-8);
}
