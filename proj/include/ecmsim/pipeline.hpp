#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecmsim/analytic.hpp"
#include "ecmsim/fixtures.hpp"
#include "ecmsim/schedule.hpp"
#include "ecmsim/stats.hpp"

// The full analysis pipeline over sweep output: per-frequency comparison
// statistics, the trajectory dataset and its regression, the forecast
// predictability test, the pooled-experiment logistic regression, extrema
// regressions, and the minimum-frequency threshold finder.

namespace ecmsim::pipeline {

// How control rows enter the trajectory dataset. The historical analysis
// code indexed the control trace by the frequency loop variable rather than
// by time, so each control block repeats a single trace value; code_faithful
// reproduces that, corrected writes the actual time series.
enum class ControlRows { code_faithful, corrected };

inline const char* to_string(ControlRows mode) {
    return mode == ControlRows::code_faithful ? "code_faithful" : "corrected";
}

inline ControlRows control_rows_from_string(const std::string& s) {
    if (s == "code_faithful" || s == "code-faithful") return ControlRows::code_faithful;
    if (s == "corrected") return ControlRows::corrected;
    throw ValidationError("unknown control-row mode \"" + s +
                          "\" (use code_faithful|corrected)");
}

// Study sweep with the standard grids: periods 1..50, horizon 100 steps.
inline SweepResult study_sweep(Mode mode = Mode::exact, unsigned max_threads = 0) {
    std::vector<int> periods;
    for (int i = 1; i <= fixtures::kSweepPeriodMax; ++i) periods.push_back(i);
    return sweep(fixtures::initial_distribution(),
                 {fixtures::kAttainable, fixtures::kExtraordinary}, fixtures::kControl,
                 periods, fixtures::kHorizon, fixtures::kDtMonths,
                 fixtures::paper_ecms(mode), max_threads);
}

// ---- per-frequency comparison statistics -----------------------------------

struct FrequencyStats {
    std::string intervention;        // condition compared against the baseline
    std::string other;               // third ANOVA group
    int family_size;                 // comparisons behind the family correction
    std::vector<int> periods;        // statistics grid (>= 2 steps by default)
    std::vector<double> anova_p;
    std::vector<double> eta2;        // three-group SS_between / SS_total
    std::vector<double> t_p;         // pooled t, intervention vs baseline
    std::vector<double> corrected_p; // family-corrected t_p
    std::vector<double> cohens_d;    // intervention vs baseline
    double dt_months;
};

// One three-group ANOVA and one intervention-vs-control comparison per
// period. Groups are the full ratio trajectories, initial point included.
inline FrequencyStats frequency_statistics(const SweepResult& sweep_result,
                                           const std::string& intervention =
                                               fixtures::kAttainable,
                                           const std::string& other =
                                               fixtures::kExtraordinary,
                                           int family_size = 3,
                                           int min_period = fixtures::kStatsPeriodMin) {
    FrequencyStats out{intervention, other, family_size, {}, {}, {}, {}, {}, {},
                       sweep_result.dt_months};
    const auto& control = sweep_result.control_trace.ratios;
    for (int period : sweep_result.periods) {
        if (period < min_period) continue;
        const auto& a = sweep_result.at(intervention, period).trace.ratios;
        const auto& u = sweep_result.at(other, period).trace.ratios;
        const auto anova = stats::anova_oneway({a, control, u});
        const auto tt = stats::ttest_pooled(a, control);
        out.periods.push_back(period);
        out.anova_p.push_back(anova.p);
        out.eta2.push_back(anova.effect->value);
        out.t_p.push_back(tt.p);
        out.corrected_p.push_back(stats::family_correct(tt.p, family_size));
        out.cohens_d.push_back(stats::cohens_d_pooled(a, control));
    }
    if (out.periods.empty()) {
        throw ValidationError("frequency statistics need at least one period >= " +
                              std::to_string(min_period));
    }
    return out;
}

// ---- trajectory dataset and regression --------------------------------------

struct TrajectoryRecord {
    std::string condition;
    int period_steps;
    int step_index;       // state index the value belongs to (or control row j)
    double t_index;       // step_index - 1, the regression time variable
    double engaged_count;
    double disengaged_count;
    double ratio;
};

// Long-format dataset over the sweep: intervention traces contribute steps
// 2..H per period; the baseline contributes one block per statistics-grid
// period, with the value picked per the ControlRows mode.
inline std::vector<TrajectoryRecord> trajectory_dataset(
    const SweepResult& sweep_result, ControlRows control_rows,
    int min_stats_period = fixtures::kStatsPeriodMin) {
    std::vector<TrajectoryRecord> records;
    const double total = sweep_result.control_trace.states.front().total();
    for (const auto& entry : sweep_result.entries) {
        const auto& states = entry.trace.states;
        for (int i = 2; i <= entry.trace.horizon(); ++i) {
            const auto& st = states[static_cast<std::size_t>(i) - 1];
            records.push_back({entry.condition, entry.period_steps, i,
                               static_cast<double>(i - 1), st.count(0), st.count(1),
                               st.count(0) / total});
        }
    }
    const auto& control_states = sweep_result.control_trace.states;
    const int horizon = sweep_result.control_trace.horizon();
    for (int period : sweep_result.periods) {
        if (period < min_stats_period) continue;
        for (int j = 1; j <= horizon; ++j) {
            const int source_index = control_rows == ControlRows::code_faithful ? period : j;
            const auto& st = control_states[static_cast<std::size_t>(source_index) - 1];
            records.push_back({sweep_result.rest_condition, period, j,
                               static_cast<double>(j - 1), st.count(0), st.count(1),
                               st.count(0) / total});
        }
    }
    return records;
}

struct TrajectoryRegression {
    ControlRows control_rows;
    std::size_t n_records;
    stats::OlsResult fit;  // intercept, one dummy per intervention, period, t
};

inline TrajectoryRegression trajectory_regression(
    const SweepResult& sweep_result, const std::vector<TrajectoryRecord>& records,
    ControlRows control_rows) {
    const auto& interventions = sweep_result.conditions;
    const std::size_t k = 3 + interventions.size();
    linalg::Matrix x(records.size(), k);
    std::vector<double> y(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        x(i, 0) = 1.0;
        for (std::size_t c = 0; c < interventions.size(); ++c) {
            x(i, 1 + c) = records[i].condition == interventions[c] ? 1.0 : 0.0;
        }
        x(i, 1 + interventions.size()) = static_cast<double>(records[i].period_steps);
        x(i, 2 + interventions.size()) = records[i].t_index;
        y[i] = records[i].ratio;
    }
    std::vector<std::string> names{"intercept"};
    names.insert(names.end(), interventions.begin(), interventions.end());
    names.push_back("period");
    names.push_back("t");
    return {control_rows, records.size(), stats::ols_fit(x, y, names)};
}

// ---- forecast predictability -------------------------------------------------

struct PredictabilityRecipe {
    bool round_counts = true;  // integer-round forecast expected counts
    bool yates = true;         // continuity correction
};

struct PredictabilityResult {
    PredictabilityRecipe recipe;
    double forecast_engaged;     // final expected counts of the baseline run
    double forecast_disengaged;
    double table_engaged;        // counts as entered into the 2x2
    double table_disengaged;
    stats::TestResult test;
};

// Compare the converged no-intervention forecast with the pooled survey
// counts. The default recipe (integer-rounded counts, Yates on) is the one
// that reproduces the published statistic triple.
inline PredictabilityResult predictability_test(
    const SimulationTrace& control_trace, PredictabilityRecipe recipe = {},
    double survey_participants = fixtures::kSurveyParticipants,
    double survey_non_participants = fixtures::kSurveyNonParticipants) {
    const auto& final_state = control_trace.states.back();
    PredictabilityResult out;
    out.recipe = recipe;
    out.forecast_engaged = final_state.count(0);
    out.forecast_disengaged = final_state.count(1);
    out.table_engaged =
        recipe.round_counts ? std::round(out.forecast_engaged) : out.forecast_engaged;
    out.table_disengaged = recipe.round_counts ? std::round(out.forecast_disengaged)
                                               : out.forecast_disengaged;
    stats::ContingencyTable2x2 table(out.table_engaged, out.table_disengaged,
                                     survey_participants, survey_non_participants,
                                     "forecast", "survey");
    out.test = stats::chi2_contingency(table, recipe.yates);
    return out;
}

// ---- pooled-experiment logistic regression ------------------------------------

struct PreliminaryLogistic {
    stats::LogisticResult fit;  // intercept, attainable, extraordinary, pre
    stats::Coefficient attainable_vs_extraordinary;
};

// Post-intervention engagement regressed on condition dummies (baseline:
// control) and pre-intervention engagement, over the tabulated subjects.
inline PreliminaryLogistic preliminary_logistic() {
    const auto cells = fixtures::subject_cells();
    std::size_t n = 0;
    for (const auto& cell : cells) n += static_cast<std::size_t>(cell.count);

    linalg::Matrix x(n, 4);
    std::vector<double> y(n);
    std::size_t row = 0;
    for (const auto& cell : cells) {
        for (int rep = 0; rep < cell.count; ++rep, ++row) {
            x(row, 0) = 1.0;
            x(row, 1) = cell.condition == fixtures::kAttainable ? 1.0 : 0.0;
            x(row, 2) = cell.condition == fixtures::kExtraordinary ? 1.0 : 0.0;
            x(row, 3) = static_cast<double>(cell.pre);
            y[row] = static_cast<double>(cell.post);
        }
    }
    PreliminaryLogistic out{
        stats::logistic_fit(x, y, {"intercept", "attainable", "extraordinary", "pre"}),
        {}};
    out.attainable_vs_extraordinary =
        out.fit.contrast({0.0, 1.0, -1.0, 0.0}, "attainable_vs_extraordinary");
    return out;
}

// ---- extrema regressions --------------------------------------------------------

struct ExtremaRegression {
    stats::OlsResult max_fit;  // whole-trace maximum ratio per (condition, period)
    stats::OlsResult min_fit;  // whole-trace minimum
};

// Condition dummies plus period against the predicted extreme participation
// ratios; the baseline trace fills its own period slots. Standardized
// coefficients are reported alongside.
inline ExtremaRegression extrema_regression(const SweepResult& sweep_result) {
    const auto& interventions = sweep_result.conditions;
    const std::size_t rows = (interventions.size() + 1) * sweep_result.periods.size();
    linalg::Matrix x(rows, 2 + interventions.size());
    std::vector<double> ymax(rows), ymin(rows);
    std::size_t row = 0;
    auto add_row = [&](const TraceSummary& summary, std::size_t condition_index,
                       int period) {
        x(row, 0) = 1.0;
        for (std::size_t c = 0; c < interventions.size(); ++c) {
            x(row, 1 + c) = condition_index == c ? 1.0 : 0.0;
        }
        x(row, 1 + interventions.size()) = static_cast<double>(period);
        ymax[row] = summary.max_ratio;
        ymin[row] = summary.min_ratio;
        ++row;
    };
    for (std::size_t c = 0; c < interventions.size(); ++c) {
        for (std::size_t pi = 0; pi < sweep_result.periods.size(); ++pi) {
            add_row(sweep_result.entry(c, pi).summary, c, sweep_result.periods[pi]);
        }
    }
    for (int period : sweep_result.periods) {
        add_row(sweep_result.control_summary, interventions.size(), period);
    }
    std::vector<std::string> names{"intercept"};
    names.insert(names.end(), interventions.begin(), interventions.end());
    names.push_back("period");
    return {stats::ols_fit(x, ymax, names, /*standardized=*/true),
            stats::ols_fit(x, ymin, names, /*standardized=*/true)};
}

// ---- threshold finder -------------------------------------------------------------

// Largest period (least frequent schedule) whose comparison statistic still
// meets the criterion. The statistic series is implied by the criterion
// kind: eta2 runs the three-group ANOVA pipeline, corrected-p and Cohen's d
// run the pooled-t pipeline against the baseline. The compared intervention
// is the sweep's first condition.
inline std::optional<stats::ThresholdHit> threshold_finder(
    const SweepResult& sweep_result, const stats::ThresholdCriterion& criterion,
    int family_size = 3) {
    const auto freq = frequency_statistics(
        sweep_result, sweep_result.conditions.front(),
        sweep_result.conditions.size() > 1 ? sweep_result.conditions[1]
                                           : sweep_result.rest_condition,
        family_size);
    const std::vector<double>* series = nullptr;
    switch (criterion.kind) {
        case stats::ThresholdKind::eta2_at_least: series = &freq.eta2; break;
        case stats::ThresholdKind::corrected_p_below: series = &freq.corrected_p; break;
        case stats::ThresholdKind::cohens_d_at_least: series = &freq.cohens_d; break;
    }
    return stats::scan_threshold(freq.periods, *series, criterion, freq.dt_months);
}

}  // namespace ecmsim::pipeline
