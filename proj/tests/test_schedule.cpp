#include "ecmsim/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "ecmsim/analytic.hpp"
#include "ecmsim/fixtures.hpp"
#include "support/generators.hpp"

using namespace ecmsim;

namespace {

EcmMap study(Mode mode = Mode::exact) { return fixtures::paper_ecms(mode); }

StateDistribution initial() { return fixtures::initial_distribution(); }

}  // namespace

TEST(Schedule, PeriodOneInterventsEveryStep) {
    const auto s = Schedule::periodic("attainable", 1, "control", 10);
    for (int i = 2; i <= 10; ++i) EXPECT_EQ(s.label_for_step(i), "attainable");
}

TEST(Schedule, PeriodTwoHitsEveryEvenIndex) {
    const auto s = Schedule::periodic("attainable", 2, "control", 100);
    int interventions = 0;
    for (int i = 2; i <= 100; ++i) {
        if (s.label_for_step(i) == "attainable") {
            EXPECT_EQ(i % 2, 0);
            ++interventions;
        }
    }
    EXPECT_EQ(interventions, 50);  // multiples of 2 in 2..100
}

// Transition sequence for period 5: three rests, an intervention, then four
// rests between interventions.
TEST(Schedule, PeriodFiveTransitionPhase) {
    const auto s = Schedule::periodic("Q", 5, "P", 12);
    std::vector<std::string> transitions;
    for (int i = 2; i <= 12; ++i) transitions.push_back(s.label_for_step(i));
    const std::vector<std::string> expected = {"P", "P", "P", "Q", "P", "P",
                                               "P", "P", "Q", "P", "P"};
    EXPECT_EQ(transitions, expected);
}

TEST(Schedule, StructuralValidation) {
    EXPECT_THROW(Schedule::periodic("a", 0, "b", 10), ValidationError);
    EXPECT_THROW(Schedule::periodic("a", 2, "b", 1), ValidationError);
    EXPECT_THROW(Schedule::constant("a", 0), ValidationError);
    EXPECT_THROW(Schedule::explicit_labels({}), ValidationError);
    const auto s = Schedule::explicit_labels({"a", "b", "a"});
    EXPECT_EQ(s.horizon(), 4);
}

TEST(Simulate, UnknownConditionNamesTheLabel) {
    const auto s = Schedule::periodic("peer", 3, fixtures::kControl, 10);
    try {
        simulate(initial(), s, study());
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("peer"), std::string::npos);
    }
}

TEST(Simulate, ControlConstantConvergesToPublishedCount) {
    const auto trace = simulate(
        initial(), Schedule::constant(fixtures::kControl, fixtures::kHorizon), study());
    ASSERT_EQ(trace.horizon(), 100);
    const double final_engaged = trace.states.back().count("engaged");
    EXPECT_NEAR(final_engaged, 120.86, 0.01);
    EXPECT_NEAR(trace.ratios.back(), 0.5078, 1e-4);
    // totals constant across the trace
    for (const auto& st : trace.states) EXPECT_NEAR(st.total(), 238.0, 1e-9);
}

TEST(Simulate, HorizonOneKeepsOnlyTheInitialState) {
    const auto trace = simulate(initial(), Schedule::constant(fixtures::kControl, 1), study());
    ASSERT_EQ(trace.horizon(), 1);
    EXPECT_DOUBLE_EQ(trace.states[0].count(0), 127.0);
    EXPECT_THROW(summarize(trace), ValidationError);
}

TEST(Simulate, RoundedAttainableEverySixMonthsOscillatesAtPublishedPeaks) {
    const auto trace = simulate(
        initial(),
        Schedule::periodic(fixtures::kAttainable, 4, fixtures::kControl, fixtures::kHorizon),
        study(Mode::rounded));
    const auto summary = summarize(trace);
    EXPECT_NEAR(summary.converged_peak_high, 0.6803, 5e-4);
    EXPECT_NEAR(summary.converged_peak_low, 0.5224, 5e-4);
}

TEST(Simulate, ConstantScheduleEqualsRepeatedStepExactly) {
    const auto ecms = study();
    const auto& control = ecms.at(fixtures::kControl);
    const auto trace =
        simulate(initial(), Schedule::constant(fixtures::kControl, 40), ecms);
    auto d = initial();
    for (int i = 0; i < 40; ++i) {
        EXPECT_EQ(trace.states[static_cast<std::size_t>(i)].count(0), d.count(0));
        EXPECT_EQ(trace.states[static_cast<std::size_t>(i)].count(1), d.count(1));
        d = step(d, control);
    }
}

TEST(Simulate, ExplicitScheduleIsFirstClass) {
    const auto ecms = study();
    const auto s = Schedule::explicit_labels(
        {fixtures::kAttainable, fixtures::kExtraordinary, fixtures::kControl,
         fixtures::kAttainable});
    const auto trace = simulate(initial(), s, ecms);
    ASSERT_EQ(trace.horizon(), 5);
    auto d = initial();
    d = step(d, ecms.at(fixtures::kAttainable));
    d = step(d, ecms.at(fixtures::kExtraordinary));
    EXPECT_DOUBLE_EQ(trace.states[2].count(0), d.count(0));
}

TEST(Simulate, ControlConvergenceBoundedBySpectralDecay) {
    const auto ecms = study();
    const auto trace =
        simulate(initial(), Schedule::constant(fixtures::kControl, 100), ecms);
    const double e = equilibrium(ecms.at(fixtures::kControl)).tracked_ratio;
    const double lambda = decay_rate(ecms.at(fixtures::kControl));
    const double bound =
        std::pow(std::abs(lambda), 99) * std::abs(trace.ratios.front() - e) + 1e-12;
    EXPECT_LE(std::abs(trace.ratios.back() - e), bound);
}

// Post-intervention peaks converge geometrically, contraction per cycle
// bounded by |lambda_rest|^(T-1) * |lambda_intervention|.
TEST(Simulate, PeakConvergenceIsGeometric) {
    const auto ecms = study();
    const int T = 3;
    const auto trace = simulate(
        initial(), Schedule::periodic(fixtures::kAttainable, T, fixtures::kControl, 100),
        ecms);
    const double rate = std::pow(std::abs(decay_rate(ecms.at(fixtures::kControl))), T - 1) *
                        std::abs(decay_rate(ecms.at(fixtures::kAttainable)));
    std::vector<double> peaks;
    for (int i = T; i <= 100; i += T) peaks.push_back(trace.ratios[i - 1]);
    double prev_gap = 0.0;
    for (std::size_t k = 1; k < peaks.size(); ++k) {
        const double gap = std::abs(peaks[k] - peaks[k - 1]);
        // the contraction approaches the bound exactly, so leave room for
        // rounding noise in the ratio-level digits
        if (k > 1 && prev_gap > 1e-12) {
            EXPECT_LE(gap, prev_gap * rate * (1.0 + 1e-6) + 1e-15) << "cycle " << k;
        }
        prev_gap = gap;
    }
}

// Simulated converged-cycle peaks match the closed-form pattern.
TEST(Simulate, ConvergedPeaksMatchAnalyticSolver) {
    const auto ecms = study();
    const auto& rest = ecms.at(fixtures::kControl);
    const auto& interv = ecms.at(fixtures::kAttainable);
    for (int T = 1; T <= 16; ++T) {
        const auto trace = simulate(
            initial(), Schedule::periodic(fixtures::kAttainable, T, fixtures::kControl, 100),
            ecms);
        const auto summary = summarize(trace);
        const auto pattern = periodic_peaks(rest, interv, T);
        EXPECT_NEAR(summary.converged_peak_high,
                    std::max(pattern.upper_peak, pattern.lower_peak), 1e-9)
            << "T=" << T;
        EXPECT_NEAR(summary.converged_peak_low,
                    std::min(pattern.upper_peak, pattern.lower_peak), 1e-9)
            << "T=" << T;
    }
}

TEST(Summarize, ConstantRatioTraceHasZeroSpread) {
    StateSpace space({"a", "b"});
    EcmMap ecms;
    ecms.emplace("id", TransitionMatrix(space, {1.0, 0.0, 0.0, 1.0}, "id"));
    const auto trace = simulate(StateDistribution(space, {30.0, 10.0}),
                                Schedule::constant("id", 25), ecms);
    const auto summary = summarize(trace);
    EXPECT_DOUBLE_EQ(summary.mean_ratio, 0.75);
    EXPECT_DOUBLE_EQ(summary.std_ratio, 0.0);
    EXPECT_DOUBLE_EQ(summary.max_ratio, summary.min_ratio);
}

TEST(Summarize, ControlMeanMatchesGeometricDecaySum) {
    const auto trace = simulate(
        initial(), Schedule::constant(fixtures::kControl, fixtures::kHorizon), study());
    const auto summary = summarize(trace);
    EXPECT_NEAR(summary.mean_ratio, 0.5082660322429753, 1e-13);
    EXPECT_NEAR(summary.mean_ratio, 0.5083, 5e-5);
}

TEST(Summarize, AttainableEveryThreeMonthsConvergedPeaks) {
    const auto trace = simulate(
        initial(),
        Schedule::periodic(fixtures::kAttainable, 2, fixtures::kControl, fixtures::kHorizon),
        study());
    const auto summary = summarize(trace);
    EXPECT_NEAR(summary.converged_peak_high, 0.7133, 5e-5);
    EXPECT_NEAR(summary.converged_peak_low, 0.5964, 5e-5);
}

TEST(Sweep, StudyGridShape) {
    const auto result =
        sweep(initial(), {fixtures::kAttainable, fixtures::kExtraordinary},
              fixtures::kControl, [] {
                  std::vector<int> p;
                  for (int i = 1; i <= 50; ++i) p.push_back(i);
                  return p;
              }(),
              fixtures::kHorizon, fixtures::kDtMonths, study());
    EXPECT_EQ(result.entries.size(), 100u);
    EXPECT_EQ(result.entry(0, 0).condition, fixtures::kAttainable);
    EXPECT_EQ(result.entry(1, 49).condition, fixtures::kExtraordinary);
    EXPECT_EQ(result.entry(1, 49).period_steps, 50);
    EXPECT_EQ(result.control_trace.horizon(), 100);
}

TEST(Sweep, SingletonGridEqualsSimulate) {
    const auto ecms = study();
    const auto result = sweep(initial(), {fixtures::kAttainable}, fixtures::kControl, {4},
                              fixtures::kHorizon, fixtures::kDtMonths, ecms);
    const auto direct = simulate(
        initial(),
        Schedule::periodic(fixtures::kAttainable, 4, fixtures::kControl, fixtures::kHorizon),
        ecms);
    ASSERT_EQ(result.entries.size(), 1u);
    EXPECT_EQ(result.entries[0].trace.ratios, direct.ratios);
}

TEST(Sweep, MeanRatiosOrderedMonotonicallyInPeriod) {
    std::vector<int> periods;
    for (int i = 1; i <= 50; ++i) periods.push_back(i);
    const auto result =
        sweep(initial(), {fixtures::kAttainable, fixtures::kExtraordinary},
              fixtures::kControl, periods, fixtures::kHorizon, fixtures::kDtMonths, study());
    for (std::size_t pi = 1; pi + 1 < periods.size(); ++pi) {
        EXPECT_GT(result.entry(0, pi).summary.mean_ratio,
                  result.entry(0, pi + 1).summary.mean_ratio)
            << "attainable at period " << periods[pi];
        EXPECT_LT(result.entry(1, pi).summary.mean_ratio,
                  result.entry(1, pi + 1).summary.mean_ratio)
            << "extraordinary at period " << periods[pi];
    }
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
    std::vector<int> periods;
    for (int i = 1; i <= 20; ++i) periods.push_back(i);
    const auto one = sweep(initial(), {fixtures::kAttainable, fixtures::kExtraordinary},
                           fixtures::kControl, periods, 60, 1.5, study(), 1);
    const auto four = sweep(initial(), {fixtures::kAttainable, fixtures::kExtraordinary},
                            fixtures::kControl, periods, 60, 1.5, study(), 4);
    ASSERT_EQ(one.entries.size(), four.entries.size());
    for (std::size_t k = 0; k < one.entries.size(); ++k) {
        EXPECT_EQ(one.entries[k].trace.ratios, four.entries[k].trace.ratios) << k;
    }
}

TEST(Sweep, EmptyGridsRejected) {
    EXPECT_THROW(sweep(initial(), {}, fixtures::kControl, {1}, 10, 1.5, study()),
                 ValidationError);
    EXPECT_THROW(sweep(initial(), {fixtures::kAttainable}, fixtures::kControl, {}, 10, 1.5,
                       study()),
                 ValidationError);
}

// Swapping the label order everywhere permutes outputs exactly.
TEST(Relabeling, TraceIsInvariantUnderStateRelabeling) {
    const auto ecms = study();
    const auto trace = simulate(
        initial(), Schedule::periodic(fixtures::kAttainable, 3, fixtures::kControl, 50),
        ecms);

    StateSpace swapped({"disengaged", "engaged"});
    EcmMap swapped_ecms;
    for (const auto& [name, m] : ecms) {
        swapped_ecms.emplace(
            name, TransitionMatrix(swapped,
                                   {m.at(1, 1), m.at(1, 0), m.at(0, 1), m.at(0, 0)}, name));
    }
    StateDistribution swapped_initial(swapped, {111.0, 127.0});
    const auto swapped_trace = simulate(
        swapped_initial, Schedule::periodic(fixtures::kAttainable, 3, fixtures::kControl, 50),
        swapped_ecms);

    for (int i = 0; i < 50; ++i) {
        const auto& a = trace.states[static_cast<std::size_t>(i)];
        const auto& b = swapped_trace.states[static_cast<std::size_t>(i)];
        EXPECT_EQ(a.count("engaged"), b.count("engaged")) << i;
        EXPECT_EQ(a.count("disengaged"), b.count("disengaged")) << i;
    }
}
