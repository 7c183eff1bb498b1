#pragma once

#include <chrono>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ecmsim/analytic.hpp"
#include "ecmsim/config.hpp"
#include "ecmsim/core.hpp"
#include "ecmsim/fixtures.hpp"
#include "ecmsim/io.hpp"
#include "ecmsim/pipeline.hpp"
#include "ecmsim/schedule.hpp"
#include "ecmsim/stats.hpp"
#include "ecmsim/svg.hpp"

// Command-line surface. Subcommands: fit, simulate, sweep, equilibrium,
// peaks, validate, thresholds, report. Exit codes: 0 success, 1 input or
// validation trouble, 2 numeric failure.

namespace ecmsim::cli {

// Everything a subcommand needs to run, resolved from --fixtures or --config.
struct Source {
    Mode mode = Mode::exact;
    EcmMap ecms;
    StateDistribution initial;
    double dt_months = fixtures::kDtMonths;
    int horizon = fixtures::kHorizon;
    std::vector<std::string> sweep_interventions;
    std::string sweep_rest;
    std::vector<int> sweep_periods;
    int stats_min_period = fixtures::kStatsPeriodMin;
    int family_size = 3;
    pipeline::ControlRows control_rows = pipeline::ControlRows::code_faithful;
    std::map<std::string, Schedule> schedules;
    bool is_fixture = false;
    nlohmann::json meta;  // kind, name/path, content hash
};

struct CommonFlags {
    std::string fixtures;
    std::string config_path;
    std::string mode = "exact";
    unsigned threads = 0;
};

inline void add_common_flags(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--fixtures", flags.fixtures,
                    "use an embedded dataset (currently: paper)");
    sub->add_option("--config", flags.config_path, "JSON project configuration");
    sub->add_option("--mode", flags.mode,
                    "parameter mode: exact count ratios or two-decimal rounded")
        ->check(CLI::IsMember({"exact", "rounded"}));
    sub->add_option("--threads", flags.threads,
                    "sweep worker cap (0 = auto, also via ECMSIM_THREADS)");
}

namespace detail {

inline nlohmann::json fixture_fingerprint() {
    nlohmann::json j;
    for (const auto& counts : fixtures::all_counts()) {
        nlohmann::json grid = nlohmann::json::array();
        for (std::size_t to = 0; to < 2; ++to) {
            grid.push_back({counts.at(to, 0), counts.at(to, 1)});
        }
        j["counts"][counts.condition()] = grid;
    }
    j["initial"] = {127, 111};
    j["survey"] = {fixtures::kSurveyParticipants, fixtures::kSurveyNonParticipants};
    return j;
}

}  // namespace detail

inline Source resolve_source(const CommonFlags& flags) {
    if (!flags.fixtures.empty() && !flags.config_path.empty()) {
        throw ValidationError("use either --fixtures or --config, not both");
    }
    const Mode mode = mode_from_string(flags.mode);
    if (!flags.fixtures.empty()) {
        if (flags.fixtures != "paper") {
            throw ValidationError("unknown fixture set \"" + flags.fixtures +
                                  "\" (available: paper)");
        }
        Source src{mode,
                   fixtures::paper_ecms(mode),
                   fixtures::initial_distribution(),
                   fixtures::kDtMonths,
                   fixtures::kHorizon,
                   {fixtures::kAttainable, fixtures::kExtraordinary},
                   fixtures::kControl,
                   {},
                   fixtures::kStatsPeriodMin,
                   3,
                   pipeline::ControlRows::code_faithful,
                   {},
                   true,
                   {}};
        for (int i = 1; i <= fixtures::kSweepPeriodMax; ++i) src.sweep_periods.push_back(i);
        src.meta = {{"kind", "fixtures"},
                    {"name", "paper"},
                    {"hash", io::fnv1a64_hex(detail::fixture_fingerprint().dump())}};
        return src;
    }
    if (!flags.config_path.empty()) {
        const std::string raw = io::read_text(flags.config_path);
        ProjectConfig config = load_config(flags.config_path);
        EcmMap ecms;
        for (const auto& [name, m] : config.conditions) {
            ecms.emplace(name, mode == Mode::rounded
                                   ? rounded_to_decimals(m, 2).validated()
                                   : m);
        }
        Source src{mode,
                   std::move(ecms),
                   config.initial,
                   config.dt_months,
                   config.horizon,
                   config.sweep_interventions,
                   config.sweep_rest,
                   config.sweep_periods,
                   config.stats_min_period,
                   config.family_size,
                   config.control_rows,
                   config.schedules,
                   false,
                   {}};
        src.meta = {{"kind", "config"},
                    {"path", flags.config_path},
                    {"hash", io::fnv1a64_hex(raw)}};
        return src;
    }
    throw ValidationError(
        "no input selected: pass --fixtures paper or --config <file> (see --help)");
}

namespace detail {

// "Once per X months" to a whole number of steps.
inline int months_to_period_steps(double months, double dt_months) {
    const double steps = months / dt_months;
    const double rounded = std::round(steps);
    if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9) {
        throw ValidationError("period of " + io::format_sig(months, 6) +
                              " months is not a whole number of " +
                              io::format_sig(dt_months, 6) + "-month steps");
    }
    return static_cast<int>(rounded);
}

inline const TransitionMatrix& condition_or_throw(const Source& src,
                                                  const std::string& name) {
    auto it = src.ecms.find(name);
    if (it == src.ecms.end()) {
        throw ValidationError("unknown condition \"" + name + "\"");
    }
    return it->second;
}

inline nlohmann::json meta_block(const Source& src, bool with_timestamp) {
    nlohmann::json meta{{"tool", "ecmsim"},
                        {"mode", to_string(src.mode)},
                        {"control_rows", to_string(src.control_rows)},
                        {"dt_months", src.dt_months},
                        {"horizon", src.horizon},
                        {"family_size", src.family_size},
                        {"source", src.meta}};
    if (with_timestamp) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
        meta["timestamp"] = buf;
    }
    return meta;
}

inline std::string format_matrix_text(const TransitionMatrix& m) {
    std::string out = m.condition() + " (columns are origin states)\n";
    const auto& labels = m.space().labels();
    for (std::size_t to = 0; to < m.dim(); ++to) {
        out += "  to " + labels[to] + ":";
        for (std::size_t from = 0; from < m.dim(); ++from) {
            out += " " + io::format_sig(m.at(to, from), 10);
        }
        out += "\n";
    }
    return out;
}

inline nlohmann::json matrix_json(const TransitionMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t to = 0; to < m.dim(); ++to) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t from = 0; from < m.dim(); ++from) row.push_back(m.at(to, from));
        rows.push_back(row);
    }
    return nlohmann::json{{"condition", m.condition()},
                          {"rows_are", "to"},
                          {"states", m.space().labels()},
                          {"matrix", rows}};
}

// Fig-style SVG set emitted next to a report.
inline void emit_figures(const Source& src, const SweepResult& sweep_result,
                         const pipeline::FrequencyStats& freq, const std::string& dir) {
    namespace sv = ecmsim::svg;
    const auto& control = sweep_result.control_trace;

    auto step_axis = [&](const std::vector<double>& ys) {
        sv::Series s;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            s.xs.push_back(static_cast<double>(i + 1));
            s.ys.push_back(ys[i]);
        }
        return s;
    };

    if (src.is_fixture) {
        auto forecast = step_axis(control.ratios);
        forecast.label = "no-intervention forecast";
        sv::ChartSpec spec{"Forecast participation rate vs pooled surveys",
                           "step (1.5 months each)",
                           "engaged share",
                           {{fixtures::kSurveyParticipants / fixtures::kSurveyTotal,
                             "pooled survey share"}}};
        sv::render_svg_lines({forecast}, spec, dir + "/forecast_vs_survey.svg");
    }

    for (int period : {2, 4, 8, 16}) {
        std::vector<sv::Series> series;
        for (const auto& cond : src.sweep_interventions) {
            auto s = step_axis(sweep_result.at(cond, period).trace.ratios);
            s.label = cond;
            series.push_back(std::move(s));
        }
        auto s = step_axis(control.ratios);
        s.label = sweep_result.rest_condition;
        series.push_back(std::move(s));
        sv::ChartSpec spec{"Participation trajectories, intervention every " +
                               io::format_sig(period * src.dt_months, 3) + " months",
                           "step (" + io::format_sig(src.dt_months, 3) + " months each)",
                           "engaged share",
                           {}};
        sv::render_svg_lines(series, spec,
                             dir + "/trajectories_period_" + std::to_string(period) +
                                 ".svg");
    }

    {
        std::vector<sv::Series> series;
        for (const auto& cond : src.sweep_interventions) {
            sv::Series s;
            s.label = cond;
            for (int period : sweep_result.periods) {
                if (period < src.stats_min_period) continue;
                s.xs.push_back(period);
                s.ys.push_back(sweep_result.at(cond, period).summary.mean_ratio);
            }
            series.push_back(std::move(s));
        }
        sv::Series s;
        s.label = sweep_result.rest_condition;
        for (int period : sweep_result.periods) {
            if (period < src.stats_min_period) continue;
            s.xs.push_back(period);
            s.ys.push_back(sweep_result.control_summary.mean_ratio);
        }
        series.push_back(std::move(s));
        sv::ChartSpec spec{"Mean engaged share by intervention period",
                           "period (steps)", "mean engaged share", {}};
        sv::render_svg_lines(series, spec, dir + "/mean_ratio_by_period.svg");
    }

    auto period_series = [&](const std::vector<double>& ys, const std::string& label) {
        sv::Series s;
        s.label = label;
        for (std::size_t i = 0; i < freq.periods.size(); ++i) {
            s.xs.push_back(freq.periods[i]);
            s.ys.push_back(ys[i]);
        }
        return s;
    };
    sv::render_svg_lines({period_series(freq.anova_p, "ANOVA p")},
                         {"Three-group ANOVA p by period", "period (steps)", "p", {}},
                         dir + "/anova_p_by_period.svg");
    sv::render_svg_lines(
        {period_series(freq.eta2, "eta squared")},
        {"Effect size by period",
         "period (steps)",
         "eta squared",
         {{0.26, "large"}, {0.13, "medium"}, {0.02, "small"}}},
        dir + "/eta_squared_by_period.svg");
    sv::render_svg_lines(
        {period_series(freq.corrected_p, "corrected p")},
        {"Family-corrected comparison p by period",
         "period (steps)",
         "p",
         {{0.05, "p = .05"}, {0.001, "p = .001"}}},
        dir + "/corrected_p_by_period.svg");
    sv::render_svg_lines(
        {period_series(freq.cohens_d, "Cohen's d")},
        {"Standardized mean difference by period",
         "period (steps)",
         "d",
         {{0.8, "large"}, {0.5, "medium"}, {0.2, "small"}}},
        dir + "/cohens_d_by_period.svg");

    {
        std::vector<sv::Series> series;
        for (const auto& cond : src.sweep_interventions) {
            sv::Series hi, lo;
            hi.label = cond + " max";
            lo.label = cond + " min";
            for (int period : sweep_result.periods) {
                const auto& summary = sweep_result.at(cond, period).summary;
                hi.xs.push_back(period);
                hi.ys.push_back(summary.max_ratio);
                lo.xs.push_back(period);
                lo.ys.push_back(summary.min_ratio);
            }
            series.push_back(std::move(hi));
            series.push_back(std::move(lo));
        }
        sv::Series hi, lo;
        hi.label = sweep_result.rest_condition + " max";
        lo.label = sweep_result.rest_condition + " min";
        for (int period : sweep_result.periods) {
            hi.xs.push_back(period);
            hi.ys.push_back(sweep_result.control_summary.max_ratio);
            lo.xs.push_back(period);
            lo.ys.push_back(sweep_result.control_summary.min_ratio);
        }
        series.push_back(std::move(hi));
        series.push_back(std::move(lo));
        sv::ChartSpec spec{"Predicted extreme participation rates", "period (steps)",
                           "engaged share", {}};
        sv::render_svg_lines(series, spec, dir + "/extrema_by_period.svg");
    }
}

inline SweepResult run_source_sweep(const Source& src, unsigned threads) {
    if (src.sweep_interventions.empty() || src.sweep_rest.empty() ||
        src.sweep_periods.empty()) {
        throw ValidationError(
            "sweep grids are not fully specified (interventions, rest, periods)");
    }
    return sweep(src.initial, src.sweep_interventions, src.sweep_rest, src.sweep_periods,
                 src.horizon, src.dt_months, src.ecms, threads);
}

// The full analysis report: analytic constants in both parameter modes,
// forecast check, regressions in both control-row modes, per-frequency
// statistics, thresholds and extrema.
inline nlohmann::json build_report(const Source& src, const SweepResult& sweep_result,
                                   bool with_timestamp) {
    nlohmann::json report;
    report["meta"] = meta_block(src, with_timestamp);
    report["meta"]["periods"] = {{"from", sweep_result.periods.front()},
                                 {"to", sweep_result.periods.back()},
                                 {"stats_min", src.stats_min_period}};

    const bool two_state = src.initial.space().size() == 2;

    auto analytic_block = [&](const EcmMap& ecms) {
        nlohmann::json block;
        for (const auto& [name, m] : ecms) {
            nlohmann::json entry;
            try {
                entry = io::to_json(equilibrium(m));
            } catch (const NumericError& e) {
                entry = {{"error", e.what()}};
            }
            if (m.dim() == 2) entry["decay"] = decay_rate(m);
            block[name] = entry;
        }
        return block;
    };

    report["equilibria"][to_string(src.mode)] = analytic_block(src.ecms);
    if (src.is_fixture) {
        const Mode other = src.mode == Mode::exact ? Mode::rounded : Mode::exact;
        report["equilibria"][to_string(other)] = analytic_block(fixtures::paper_ecms(other));
    }

    if (two_state) {
        auto peaks_block = [&](const EcmMap& ecms) {
            nlohmann::json block;
            const auto& rest = ecms.at(sweep_result.rest_condition);
            for (const auto& cond : src.sweep_interventions) {
                nlohmann::json list = nlohmann::json::array();
                for (int period : {2, 4}) {
                    list.push_back(io::to_json(periodic_peaks(rest, ecms.at(cond), period)));
                }
                block[cond] = list;
            }
            return block;
        };
        report["periodic_peaks"][to_string(src.mode)] = peaks_block(src.ecms);
        if (src.is_fixture) {
            const Mode other = src.mode == Mode::exact ? Mode::rounded : Mode::exact;
            report["periodic_peaks"][to_string(other)] =
                peaks_block(fixtures::paper_ecms(other));
        }
    }

    const auto& control = sweep_result.control_trace;
    report["control_forecast"] = {
        {"final_engaged", control.states.back().count(0)},
        {"final_ratio", control.ratios.back()},
        {"summary", io::to_json(sweep_result.control_summary)}};

    if (src.is_fixture) {
        nlohmann::json variants = nlohmann::json::array();
        for (bool round_counts : {true, false}) {
            for (bool yates : {true, false}) {
                const auto r =
                    pipeline::predictability_test(control, {round_counts, yates});
                variants.push_back({{"round_counts", round_counts},
                                    {"yates", yates},
                                    {"table",
                                     {{"forecast_engaged", r.table_engaged},
                                      {"forecast_disengaged", r.table_disengaged},
                                      {"survey_engaged", fixtures::kSurveyParticipants},
                                      {"survey_disengaged",
                                       fixtures::kSurveyNonParticipants}}},
                                    {"result", io::to_json(r.test)}});
            }
        }
        report["predictability"] = {{"default_recipe",
                                     {{"round_counts", true}, {"yates", true}}},
                                    {"variants", variants}};

        const auto logit = pipeline::preliminary_logistic();
        report["preliminary_logistic"] = io::to_json(logit.fit);
        report["preliminary_logistic"]["attainable_vs_extraordinary"] =
            io::to_json(logit.attainable_vs_extraordinary);

        report["toy_cultures"] = {
            {"C1",
             {{"conformer_equilibrium",
               equilibrium(fixtures::toy_system_c1()).tracked_ratio}}},
            {"C2",
             {{"conformer_equilibrium",
               equilibrium(fixtures::toy_system_c2()).tracked_ratio},
              {"note", "the 87.5:12.5 split reads non-conformers : conformers"}}}};
    }

    const auto freq = pipeline::frequency_statistics(
        sweep_result, src.sweep_interventions.front(),
        src.sweep_interventions.size() > 1 ? src.sweep_interventions[1]
                                           : sweep_result.rest_condition,
        src.family_size, src.stats_min_period);
    report["frequency_statistics"] = {{"intervention", freq.intervention},
                                      {"periods", freq.periods},
                                      {"anova_p", freq.anova_p},
                                      {"eta2", freq.eta2},
                                      {"t_p", freq.t_p},
                                      {"corrected_p", freq.corrected_p},
                                      {"cohens_d", freq.cohens_d}};

    auto threshold_entry = [&](const stats::ThresholdCriterion& criterion) {
        const auto hit =
            pipeline::threshold_finder(sweep_result, criterion, src.family_size);
        if (!hit) return nlohmann::json(nullptr);
        nlohmann::json j{{"period_steps", hit->period_steps},
                         {"months", hit->months},
                         {"boundary_value", hit->boundary_value},
                         {"warnings", hit->warnings}};
        if (hit->first_failing) j["first_failing_value"] = *hit->first_failing;
        return j;
    };
    report["thresholds"] = {
        {"eta2_at_least_0.14",
         threshold_entry({stats::ThresholdKind::eta2_at_least, 0.14})},
        {"corrected_p_below_0.05",
         threshold_entry({stats::ThresholdKind::corrected_p_below, 0.05})},
        {"cohens_d_at_least_0.8",
         threshold_entry({stats::ThresholdKind::cohens_d_at_least, 0.8})}};

    for (auto mode : {pipeline::ControlRows::code_faithful, pipeline::ControlRows::corrected}) {
        const auto records =
            pipeline::trajectory_dataset(sweep_result, mode, src.stats_min_period);
        const auto reg = pipeline::trajectory_regression(sweep_result, records, mode);
        report["trajectory_regression"][to_string(mode)] = io::to_json(reg.fit);
        report["trajectory_regression"][to_string(mode)]["n_records"] = reg.n_records;
    }

    const auto extrema = pipeline::extrema_regression(sweep_result);
    report["extrema_regression"] = {{"max", io::to_json(extrema.max_fit)},
                                    {"min", io::to_json(extrema.min_fit)}};
    return report;
}

}  // namespace detail

// Parse and execute. Returns the process exit code.
inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"evolve state distributions under intervention schedules and "
                 "reproduce the accompanying statistics"};
    app.name("ecmsim");
    app.require_subcommand(1);

    std::function<int()> action;

    // ---- fit ----
    {
        auto* sub = app.add_subcommand("fit", "estimate transition matrices from counts");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        auto format = std::make_shared<std::string>("text");
        sub->add_option("--format", *format, "text|json")
            ->check(CLI::IsMember({"text", "json"}));
        auto out_path = std::make_shared<std::string>();
        sub->add_option("--out", *out_path, "write instead of printing");
        sub->callback([&action, flags, format, out_path, &out] {
            action = [flags, format, out_path, &out] {
                const auto src = resolve_source(*flags);
                std::string rendered;
                if (*format == "json") {
                    nlohmann::json j;
                    for (const auto& [name, m] : src.ecms) {
                        j[name] = detail::matrix_json(m);
                    }
                    rendered = j.dump(2) + "\n";
                } else {
                    for (const auto& [name, m] : src.ecms) {
                        rendered += detail::format_matrix_text(m);
                    }
                }
                if (out_path->empty()) {
                    out << rendered;
                } else {
                    io::atomic_write_text(*out_path, rendered);
                }
                return 0;
            };
        });
    }

    // ---- simulate ----
    {
        auto* sub = app.add_subcommand("simulate", "evolve a distribution over a schedule");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        struct Opts {
            std::string condition;
            std::string intervention;
            int period = 0;
            double period_months = 0.0;
            std::string rest;
            std::string schedule_name;
            int horizon = 0;
            std::string csv;
            std::string svg_path;
        };
        auto opts = std::make_shared<Opts>();
        sub->add_option("--condition", opts->condition, "constant schedule condition");
        sub->add_option("--intervention", opts->intervention, "periodic schedule condition");
        sub->add_option("--period", opts->period, "intervention period in steps");
        sub->add_option("--period-months", opts->period_months,
                        "intervention period in months (must align with dt)");
        sub->add_option("--rest", opts->rest, "rest condition for periodic schedules");
        sub->add_option("--schedule", opts->schedule_name, "named schedule from the config");
        sub->add_option("--horizon", opts->horizon, "override horizon (steps)");
        sub->add_option("--csv", opts->csv, "write the trace as CSV");
        sub->add_option("--svg", opts->svg_path, "write the trace as an SVG chart");
        sub->callback([&action, flags, opts, &out] {
            action = [flags, opts, &out] {
                const auto src = resolve_source(*flags);
                const int horizon = opts->horizon > 0 ? opts->horizon : src.horizon;
                const int pickers = (!opts->condition.empty() ? 1 : 0) +
                                    (!opts->intervention.empty() ? 1 : 0) +
                                    (!opts->schedule_name.empty() ? 1 : 0);
                if (pickers > 1) {
                    throw ValidationError(
                        "pick one schedule source: --condition, --intervention or "
                        "--schedule");
                }
                std::optional<Schedule> schedule;
                if (!opts->schedule_name.empty()) {
                    auto it = src.schedules.find(opts->schedule_name);
                    if (it == src.schedules.end()) {
                        throw ValidationError("config defines no schedule named \"" +
                                              opts->schedule_name + "\"");
                    }
                    schedule = it->second;
                } else if (!opts->intervention.empty()) {
                    int period = opts->period;
                    if (period < 1 && opts->period_months > 0.0) {
                        period = detail::months_to_period_steps(opts->period_months,
                                                                src.dt_months);
                    }
                    if (period < 1) {
                        throw ValidationError(
                            "--intervention needs --period or --period-months");
                    }
                    const std::string rest =
                        opts->rest.empty() ? src.sweep_rest : opts->rest;
                    if (rest.empty()) {
                        throw ValidationError("no rest condition: pass --rest");
                    }
                    schedule = Schedule::periodic(opts->intervention, period, rest,
                                                  horizon, src.dt_months);
                } else if (!opts->condition.empty()) {
                    schedule = Schedule::constant(opts->condition, horizon, src.dt_months);
                } else {
                    throw ValidationError(
                        "pick a schedule: --condition, --intervention/--period, or "
                        "--schedule");
                }
                const auto trace = simulate(src.initial, *schedule, src.ecms);
                const auto& final_state = trace.states.back();
                out << "schedule: " << schedule->describe() << "\n";
                out << "steps: " << trace.horizon() << " (t = "
                    << io::format_sig(schedule->t_months(trace.horizon()), 6)
                    << " months)\n";
                for (std::size_t i = 0; i < final_state.space().size(); ++i) {
                    out << "final " << final_state.space().label(i) << ": "
                        << io::format_double(final_state.count(i)) << "\n";
                }
                out << "final " << final_state.space().label(0)
                    << " share: " << io::format_double(trace.ratios.back()) << "\n";
                if (trace.horizon() >= 2) {
                    const auto summary = summarize(trace);
                    out << "mean share: " << io::format_double(summary.mean_ratio)
                        << "  converged cycle: ["
                        << io::format_double(summary.converged_peak_low) << ", "
                        << io::format_double(summary.converged_peak_high) << "]\n";
                }
                if (!opts->csv.empty()) io::emit_trace_csv(trace, opts->csv);
                if (!opts->svg_path.empty()) {
                    svg::Series s;
                    s.label = schedule->describe();
                    for (std::size_t i = 0; i < trace.ratios.size(); ++i) {
                        s.xs.push_back(static_cast<double>(i + 1));
                        s.ys.push_back(trace.ratios[i]);
                    }
                    svg::render_svg_lines({s},
                                          {"Simulated trajectory", "step",
                                           trace.space().label(0) + " share",
                                           {}},
                                          opts->svg_path);
                }
                return 0;
            };
        });
    }

    // ---- sweep ----
    {
        auto* sub = app.add_subcommand("sweep", "simulate a grid of intervention periods");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        struct Opts {
            std::string csv;
            std::string control_rows = "code_faithful";
            int period_min = 0;
            int period_max = 0;
        };
        auto opts = std::make_shared<Opts>();
        sub->add_option("--csv", opts->csv, "write the analysis dataset as CSV");
        sub->add_option("--control-rows", opts->control_rows,
                        "baseline dataset rows: code_faithful|corrected");
        sub->add_option("--period-min", opts->period_min, "override least period");
        sub->add_option("--period-max", opts->period_max, "override greatest period");
        sub->callback([&action, flags, opts, &out] {
            action = [flags, opts, &out] {
                auto src = resolve_source(*flags);
                if (opts->period_min > 0 || opts->period_max > 0) {
                    const int lo = opts->period_min > 0 ? opts->period_min : 1;
                    const int hi = opts->period_max > 0 ? opts->period_max : lo;
                    if (hi < lo) throw ValidationError("--period-max below --period-min");
                    src.sweep_periods.clear();
                    for (int v = lo; v <= hi; ++v) src.sweep_periods.push_back(v);
                }
                src.control_rows = pipeline::control_rows_from_string(opts->control_rows);
                const auto result = detail::run_source_sweep(src, flags->threads);
                out << "sweep: " << result.entries.size() << " traces over periods "
                    << result.periods.front() << ".." << result.periods.back()
                    << " plus the " << result.rest_condition << " baseline\n";
                for (const auto& cond : result.conditions) {
                    const auto& first = result.at(cond, result.periods.front()).summary;
                    const auto& last = result.at(cond, result.periods.back()).summary;
                    out << "  " << cond << ": mean share "
                        << io::format_sig(first.mean_ratio, 6) << " (period "
                        << result.periods.front() << ") -> "
                        << io::format_sig(last.mean_ratio, 6) << " (period "
                        << result.periods.back() << ")\n";
                }
                if (!opts->csv.empty()) {
                    io::emit_trace_csv(result, opts->csv, src.control_rows,
                                       src.stats_min_period);
                    out << "dataset: " << opts->csv << "\n";
                }
                return 0;
            };
        });
    }

    // ---- equilibrium ----
    {
        auto* sub = app.add_subcommand("equilibrium", "stationary engaged share");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        auto condition = std::make_shared<std::string>();
        sub->add_option("--condition", *condition, "condition to analyze")->required();
        auto out_path = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("json");
        auto no_timestamp = std::make_shared<bool>(false);
        sub->add_option("--out", *out_path, "also write a single-section report");
        sub->add_option("--format", *format, "report format: json|text")
            ->check(CLI::IsMember({"json", "text"}));
        sub->add_flag("--no-timestamp", *no_timestamp, "omit the report timestamp");
        sub->callback([&action, flags, condition, out_path, format, no_timestamp, &out] {
            action = [flags, condition, out_path, format, no_timestamp, &out] {
                const auto src = resolve_source(*flags);
                const auto& m = detail::condition_or_throw(src, *condition);
                const auto r = equilibrium(m);
                out << *condition << " " << m.space().label(0)
                    << " equilibrium x = " << io::format_double(r.tracked_ratio) << "\n";
                out << "method: " << to_string(r.method)
                    << "  residual: " << io::format_double(r.residual) << "\n";
                if (m.dim() == 2) {
                    out << "decay rate lambda = " << io::format_double(decay_rate(m))
                        << "\n";
                }
                if (!out_path->empty()) {
                    nlohmann::json report{
                        {"meta", detail::meta_block(src, !*no_timestamp)},
                        {"equilibrium",
                         {{*condition, io::to_json(r)}}}};
                    if (m.dim() == 2) {
                        report["equilibrium"][*condition]["decay"] = decay_rate(m);
                    }
                    io::emit_report(report, *out_path,
                                    io::report_format_from_string(*format));
                }
                return 0;
            };
        });
    }

    // ---- peaks ----
    {
        auto* sub = app.add_subcommand("peaks", "converged periodic oscillation peaks");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        struct Opts {
            std::string condition;
            std::string rest;
            int period = 0;
            double period_months = 0.0;
        };
        auto opts = std::make_shared<Opts>();
        sub->add_option("--condition", opts->condition, "intervention condition")
            ->required();
        sub->add_option("--period", opts->period, "intervention period in steps");
        sub->add_option("--period-months", opts->period_months,
                        "intervention period in months (must align with dt)");
        sub->add_option("--rest", opts->rest, "rest condition (default: sweep rest)");
        sub->callback([&action, flags, opts, &out] {
            action = [flags, opts, &out] {
                const auto src = resolve_source(*flags);
                const std::string rest = opts->rest.empty() ? src.sweep_rest : opts->rest;
                if (rest.empty()) throw ValidationError("no rest condition: pass --rest");
                int period = opts->period;
                if (period < 1 && opts->period_months > 0.0) {
                    period = detail::months_to_period_steps(opts->period_months,
                                                            src.dt_months);
                }
                if (period < 1) {
                    throw ValidationError("pass --period or --period-months");
                }
                const auto pattern =
                    periodic_peaks(detail::condition_or_throw(src, rest),
                                   detail::condition_or_throw(src, opts->condition),
                                   period);
                out << opts->condition << " every " << period << " steps ("
                    << io::format_sig(period * src.dt_months, 6) << " months), rest "
                    << rest << "\n";
                out << "a = " << io::format_double(pattern.upper_peak)
                    << " (just after intervention)\n";
                out << "b = " << io::format_double(pattern.lower_peak)
                    << " (just before intervention)\n";
                out << "rest equilibrium e = "
                    << io::format_double(pattern.rest_equilibrium)
                    << "  decay lambda = " << io::format_double(pattern.decay) << "\n";
                return 0;
            };
        });
    }

    // ---- validate ----
    {
        auto* sub = app.add_subcommand(
            "validate", "compare the baseline forecast against the survey totals");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        struct Opts {
            bool no_round = false;
            bool no_yates = false;
            bool all_variants = false;
        };
        auto opts = std::make_shared<Opts>();
        sub->add_flag("--no-round", opts->no_round, "keep fractional forecast counts");
        sub->add_flag("--no-yates", opts->no_yates, "skip the continuity correction");
        sub->add_flag("--all-variants", opts->all_variants, "print all four recipes");
        sub->callback([&action, flags, opts, &out] {
            action = [flags, opts, &out] {
                const auto src = resolve_source(*flags);
                if (!src.is_fixture) {
                    throw ValidationError(
                        "validate needs the embedded survey totals: use --fixtures paper");
                }
                const auto control = simulate(
                    src.initial,
                    Schedule::constant(src.sweep_rest, src.horizon, src.dt_months),
                    src.ecms);
                auto print_one = [&](pipeline::PredictabilityRecipe recipe) {
                    const auto r = pipeline::predictability_test(control, recipe);
                    out << "recipe: " << (recipe.round_counts ? "rounded" : "raw")
                        << " counts, " << (recipe.yates ? "yates" : "no yates") << "\n";
                    out << "  forecast: " << io::format_sig(r.table_engaged, 10) << " / "
                        << io::format_sig(r.table_disengaged, 10) << "\n";
                    out << "  chi2(1) = " << io::format_sig(r.test.statistic, 6)
                        << "  p = " << io::format_sig(r.test.p, 6)
                        << "  V = " << io::format_sig(r.test.effect->value, 6) << "\n";
                };
                if (opts->all_variants) {
                    for (bool round_counts : {true, false}) {
                        for (bool yates : {true, false}) {
                            print_one({round_counts, yates});
                        }
                    }
                } else {
                    print_one({!opts->no_round, !opts->no_yates});
                }
                return 0;
            };
        });
    }

    // ---- thresholds ----
    {
        auto* sub = app.add_subcommand(
            "thresholds", "least intervention frequency meeting an effect criterion");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        struct Opts {
            std::string criterion;
            double threshold = -1.0;
            int family = 0;
        };
        auto opts = std::make_shared<Opts>();
        sub->add_option("--criterion", opts->criterion, "eta2|corrected-p|cohens-d")
            ->check(CLI::IsMember({"eta2", "corrected-p", "cohens-d"}));
        sub->add_option("--threshold", opts->threshold, "criterion threshold");
        sub->add_option("--family", opts->family, "family size for the p correction");
        sub->callback([&action, flags, opts, &out] {
            action = [flags, opts, &out] {
                const auto src = resolve_source(*flags);
                const auto sweep_result = detail::run_source_sweep(src, flags->threads);
                const int family = opts->family > 0 ? opts->family : src.family_size;

                std::vector<stats::ThresholdCriterion> criteria;
                if (opts->criterion.empty()) {
                    criteria.push_back({stats::ThresholdKind::eta2_at_least, 0.14});
                    criteria.push_back({stats::ThresholdKind::corrected_p_below, 0.05});
                } else if (opts->criterion == "eta2") {
                    criteria.push_back({stats::ThresholdKind::eta2_at_least,
                                        opts->threshold >= 0 ? opts->threshold : 0.14});
                } else if (opts->criterion == "corrected-p") {
                    criteria.push_back({stats::ThresholdKind::corrected_p_below,
                                        opts->threshold >= 0 ? opts->threshold : 0.05});
                } else {
                    criteria.push_back({stats::ThresholdKind::cohens_d_at_least,
                                        opts->threshold >= 0 ? opts->threshold : 0.8});
                }
                for (const auto& criterion : criteria) {
                    const auto hit =
                        pipeline::threshold_finder(sweep_result, criterion, family);
                    out << criterion.describe() << ": ";
                    if (!hit) {
                        out << "not satisfied at any period in the grid\n";
                        continue;
                    }
                    out << "period " << hit->period_steps << " steps = "
                        << io::format_sig(hit->months, 6) << " months (statistic "
                        << io::format_sig(hit->boundary_value, 6);
                    if (hit->first_failing) {
                        out << ", next period " << io::format_sig(*hit->first_failing, 6);
                    }
                    out << ")\n";
                    for (const auto& w : hit->warnings) out << "  warning: " << w << "\n";
                }
                return 0;
            };
        });
    }

    // ---- report ----
    {
        auto* sub = app.add_subcommand("report", "run every analysis and serialize it");
        auto flags = std::make_shared<CommonFlags>();
        add_common_flags(sub, *flags);
        struct Opts {
            std::string out_path = "report.json";
            std::string format = "json";
            std::string figures_dir;
            std::string csv;
            std::string control_rows;
            bool no_timestamp = false;
        };
        auto opts = std::make_shared<Opts>();
        sub->add_option("--out", opts->out_path, "report file (default report.json)");
        sub->add_option("--format", opts->format, "json|text")
            ->check(CLI::IsMember({"json", "text"}));
        sub->add_option("--figures", opts->figures_dir, "emit SVG charts into a directory");
        sub->add_option("--csv", opts->csv, "emit the analysis dataset as CSV");
        sub->add_option("--control-rows", opts->control_rows,
                        "dataset baseline rows: code_faithful|corrected");
        sub->add_flag("--no-timestamp", opts->no_timestamp,
                      "omit the timestamp for byte-identical reruns");
        sub->callback([&action, flags, opts, &out] {
            action = [flags, opts, &out] {
                auto src = resolve_source(*flags);
                if (!opts->control_rows.empty()) {
                    src.control_rows =
                        pipeline::control_rows_from_string(opts->control_rows);
                }
                const auto sweep_result = detail::run_source_sweep(src, flags->threads);
                const auto report =
                    detail::build_report(src, sweep_result, !opts->no_timestamp);
                io::emit_report(report, opts->out_path,
                                io::report_format_from_string(opts->format));
                out << "report: " << opts->out_path << "\n";
                if (!opts->csv.empty()) {
                    io::emit_trace_csv(sweep_result, opts->csv, src.control_rows,
                                       src.stats_min_period);
                    out << "dataset: " << opts->csv << "\n";
                }
                if (!opts->figures_dir.empty()) {
                    const auto freq = pipeline::frequency_statistics(
                        sweep_result, src.sweep_interventions.front(),
                        src.sweep_interventions.size() > 1 ? src.sweep_interventions[1]
                                                           : sweep_result.rest_condition,
                        src.family_size, src.stats_min_period);
                    detail::emit_figures(src, sweep_result, freq, opts->figures_dir);
                    out << "figures: " << opts->figures_dir << "\n";
                }
                return 0;
            };
        });
    }

    try {
        // CLI11's vector overload consumes arguments from the back
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        // usage problems are all exit 1; --help stays 0
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        return action ? action() : 1;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(std::move(args), out, err);
}

}  // namespace ecmsim::cli
