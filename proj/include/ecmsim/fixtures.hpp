#pragma once

#include <string>
#include <vector>

#include "ecmsim/core.hpp"
#include "ecmsim/schedule.hpp"

// Embedded study datasets so every analysis and test runs offline with zero
// setup. Probabilities are kept as exact count ratios; the two-decimal
// constants quoted alongside published results are derived via rounding.

namespace ecmsim {

// Parameter mode: exact count-ratio probabilities, or every entry rounded to
// two decimals to match published constants. Exact is the default everywhere;
// the published peak and equilibrium values are only reproducible in rounded
// mode (rounding shifts ratios by about 1e-3).
enum class Mode { exact, rounded };

inline const char* to_string(Mode mode) {
    return mode == Mode::exact ? "exact" : "rounded";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "exact") return Mode::exact;
    if (s == "rounded") return Mode::rounded;
    throw ValidationError("unknown mode \"" + s + "\" (use exact|rounded)");
}

namespace fixtures {

inline const std::string kAttainable = "attainable";
inline const std::string kExtraordinary = "extraordinary";
inline const std::string kControl = "control";

inline StateSpace engagement_space() {
    return StateSpace({"engaged", "disengaged"});
}

// Observed one-interval transitions per condition, n(to, from) with columns
// ordered (engaged, disengaged). Column totals: attainable 40/32,
// extraordinary 33/34, control 50/45.
inline TransitionCounts attainable_counts() {
    return TransitionCounts(engagement_space(), {36, 14, 4, 18}, kAttainable);
}

inline TransitionCounts extraordinary_counts() {
    return TransitionCounts(engagement_space(), {21, 4, 12, 30}, kExtraordinary);
}

inline TransitionCounts control_counts() {
    return TransitionCounts(engagement_space(), {36, 13, 14, 32}, kControl);
}

inline std::vector<TransitionCounts> all_counts() {
    return {attainable_counts(), extraordinary_counts(), control_counts()};
}

// Both population facts are preserved as recorded: the experiments report
// 238 subjects (127 engaged / 111 disengaged at t = 0), while the
// per-condition transition tables cover 234 subjects (123 / 111). They are
// intentionally not reconciled.
inline StateDistribution initial_distribution() {
    return StateDistribution(engagement_space(), {127.0, 111.0});
}

inline constexpr double kPopulationTotal = 238.0;
inline constexpr int kTabulatedSubjects = 234;

// Large-scale survey totals the forecast is checked against.
inline constexpr double kSurveyParticipants = 13691.0;
inline constexpr double kSurveyNonParticipants = 11172.0;
inline constexpr double kSurveyTotal = 24863.0;

inline constexpr double kDtMonths = 1.5;
inline constexpr int kHorizon = 100;        // state indices 1..100, 150 months
inline constexpr int kSweepPeriodMax = 50;  // once per 1.5 .. once per 75 months
inline constexpr int kStatsPeriodMin = 2;   // per-frequency statistics grid

inline EcmMap paper_ecms(Mode mode = Mode::exact) {
    EcmMap out;
    for (const auto& counts : all_counts()) {
        TransitionMatrix m = ecm_from_counts(counts);
        if (mode == Mode::rounded) m = rounded_to_decimals(m, 2).validated();
        out.emplace(m.condition(), std::move(m));
    }
    return out;
}

// Two-state toy cultures: a well-resourced system that favors conformers and
// a poorly resourced one that favors non-conformers.
inline StateSpace conformity_space() {
    return StateSpace({"conformers", "non-conformers"});
}

inline TransitionMatrix toy_system_c1() {
    return TransitionMatrix(conformity_space(), {0.8, 0.6, 0.2, 0.4}, "C1");
}

// Note the equilibrium: conformers settle at 12.5% here, i.e. the
// 87.5 : 12.5 split is non-conformers : conformers.
inline TransitionMatrix toy_system_c2() {
    return TransitionMatrix(conformity_space(), {0.3, 0.1, 0.7, 0.9}, "C2");
}

// Per-subject pre/post engagement cells for the pooled-experiment logistic
// regression (234 tabulated subjects).
struct SubjectCell {
    std::string condition;
    int pre;
    int post;
    int count;
};

inline std::vector<SubjectCell> subject_cells() {
    return {
        {kAttainable, 1, 1, 36},    {kAttainable, 1, 0, 4},
        {kAttainable, 0, 1, 14},    {kAttainable, 0, 0, 18},
        {kExtraordinary, 1, 1, 21}, {kExtraordinary, 1, 0, 12},
        {kExtraordinary, 0, 1, 4},  {kExtraordinary, 0, 0, 30},
        {kControl, 1, 1, 36},       {kControl, 1, 0, 14},
        {kControl, 0, 1, 13},       {kControl, 0, 0, 32},
    };
}

}  // namespace fixtures
}  // namespace ecmsim
