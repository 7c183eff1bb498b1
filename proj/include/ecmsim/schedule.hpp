#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ecmsim/core.hpp"

// Intervention schedules (constant, periodic, irregular), horizon simulation,
// frequency sweeps, and trace summaries.
//
// Step/time mapping: a trace has state indices 1..H (1-based, index 1 is the
// initial distribution) and t_months = (index - 1) * dt. A periodic schedule
// applies the intervention matrix on the transition INTO index i exactly when
// i mod period == 0; everything else uses the rest matrix.

namespace ecmsim {

using EcmMap = std::map<std::string, TransitionMatrix>;

class Schedule {
public:
    struct Constant {
        std::string condition;
    };
    struct Periodic {
        std::string intervention;
        int period_steps;
        std::string rest;
    };
    struct Explicit {
        std::vector<std::string> labels;  // one per transition, size H-1
    };

    static Schedule constant(std::string condition, int horizon, double dt_months = 1.5) {
        if (horizon < 1) throw ValidationError("horizon must be >= 1");
        return Schedule(horizon, dt_months, Constant{std::move(condition)});
    }

    static Schedule periodic(std::string intervention, int period_steps, std::string rest,
                             int horizon, double dt_months = 1.5) {
        if (period_steps < 1) throw ValidationError("period must be >= 1 step");
        if (horizon < 2) throw ValidationError("periodic schedule needs horizon >= 2");
        return Schedule(horizon, dt_months,
                        Periodic{std::move(intervention), period_steps, std::move(rest)});
    }

    static Schedule explicit_labels(std::vector<std::string> labels, double dt_months = 1.5) {
        if (labels.empty()) throw ValidationError("explicit schedule needs >= 1 transition");
        const int horizon = static_cast<int>(labels.size()) + 1;
        return Schedule(horizon, dt_months, Explicit{std::move(labels)});
    }

    int horizon() const { return horizon_; }
    double dt_months() const { return dt_months_; }
    double t_months(int state_index) const { return (state_index - 1) * dt_months_; }

    // Condition applied on the transition into state index i (2 <= i <= H).
    const std::string& label_for_step(int state_index) const {
        if (state_index < 2 || state_index > horizon_) {
            throw ValidationError("step index " + std::to_string(state_index) +
                                  " outside 2.." + std::to_string(horizon_));
        }
        if (const auto* c = std::get_if<Constant>(&assignment_)) return c->condition;
        if (const auto* p = std::get_if<Periodic>(&assignment_)) {
            return state_index % p->period_steps == 0 ? p->intervention : p->rest;
        }
        return std::get<Explicit>(assignment_).labels[static_cast<std::size_t>(state_index) - 2];
    }

    std::optional<int> period_steps() const {
        if (const auto* p = std::get_if<Periodic>(&assignment_)) return p->period_steps;
        return std::nullopt;
    }

    // Headline condition for reporting: the intervention for periodic
    // schedules, the condition itself for constant ones.
    std::string condition() const {
        if (const auto* c = std::get_if<Constant>(&assignment_)) return c->condition;
        if (const auto* p = std::get_if<Periodic>(&assignment_)) return p->intervention;
        return "explicit";
    }

    std::string describe() const {
        if (const auto* c = std::get_if<Constant>(&assignment_)) {
            return "constant(" + c->condition + ")";
        }
        if (const auto* p = std::get_if<Periodic>(&assignment_)) {
            return "periodic(" + p->intervention + " every " +
                   std::to_string(p->period_steps) + " steps, rest " + p->rest + ")";
        }
        return "explicit(" + std::to_string(horizon_ - 1) + " transitions)";
    }

    // Every label referenced by the schedule must resolve to a matrix.
    void validate_against(const EcmMap& ecms) const {
        auto check = [&](const std::string& label) {
            if (ecms.find(label) == ecms.end()) {
                throw ValidationError("schedule references unknown condition \"" + label + "\"");
            }
        };
        if (const auto* c = std::get_if<Constant>(&assignment_)) {
            check(c->condition);
        } else if (const auto* p = std::get_if<Periodic>(&assignment_)) {
            check(p->intervention);
            check(p->rest);
        } else {
            for (const auto& label : std::get<Explicit>(assignment_).labels) check(label);
        }
    }

private:
    Schedule(int horizon, double dt, std::variant<Constant, Periodic, Explicit> a)
        : horizon_(horizon), dt_months_(dt), assignment_(std::move(a)) {}

    int horizon_;
    double dt_months_;
    std::variant<Constant, Periodic, Explicit> assignment_;
};

struct SimulationTrace {
    Schedule schedule;
    std::vector<StateDistribution> states;  // H entries, [0] is the initial
    std::vector<double> ratios;             // tracked-state share per step

    int horizon() const { return static_cast<int>(states.size()); }
    const StateSpace& space() const { return states.front().space(); }
};

// Deterministic forward evolution of the initial distribution.
inline SimulationTrace simulate(const StateDistribution& initial, const Schedule& schedule,
                                const EcmMap& ecms) {
    schedule.validate_against(ecms);
    for (const auto& [label, matrix] : ecms) {
        if (matrix.space() != initial.space()) {
            throw ValidationError("matrix \"" + label + "\" uses a different state space "
                                  "than the initial distribution");
        }
    }
    SimulationTrace trace{schedule, {}, {}};
    trace.states.reserve(static_cast<std::size_t>(schedule.horizon()));
    trace.ratios.reserve(static_cast<std::size_t>(schedule.horizon()));
    trace.states.push_back(initial);
    trace.ratios.push_back(initial.tracked_ratio());
    for (int i = 2; i <= schedule.horizon(); ++i) {
        const auto& m = ecms.at(schedule.label_for_step(i));
        trace.states.push_back(step(trace.states.back(), m));
        trace.ratios.push_back(trace.states.back().tracked_ratio());
    }
    return trace;
}

struct TraceSummary {
    double mean_ratio;
    double std_ratio;  // n-1 denominator
    double max_ratio;
    double min_ratio;
    // Extrema over the last complete intervention cycle (the whole-trace
    // extremes include the initial transient; these do not).
    double converged_peak_high;
    double converged_peak_low;
};

inline TraceSummary summarize(const SimulationTrace& trace) {
    const auto& r = trace.ratios;
    const std::size_t n = r.size();
    if (n < 2) throw ValidationError("summarize needs a trace with >= 2 steps");

    double mean = 0.0;
    double lo = r[0];
    double hi = r[0];
    for (double x : r) {
        mean += x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    // Last complete cycle: T points ending at the last intervention index
    // (a multiple of T). Constant and explicit schedules degenerate to the
    // final point.
    const int H = trace.horizon();
    int period = trace.schedule.period_steps().value_or(1);
    if (period > H) period = 1;
    const int last_intervention = period * (H / period);
    double cy_lo = r[static_cast<std::size_t>(last_intervention) - 1];
    double cy_hi = cy_lo;
    for (int i = last_intervention - period + 1; i <= last_intervention; ++i) {
        const double x = r[static_cast<std::size_t>(i) - 1];
        cy_lo = std::min(cy_lo, x);
        cy_hi = std::max(cy_hi, x);
    }
    return {mean, sd, hi, lo, cy_hi, cy_lo};
}

struct SweepEntry {
    std::string condition;
    int period_steps;
    SimulationTrace trace;
    TraceSummary summary;
};

struct SweepResult {
    std::vector<std::string> conditions;  // intervention conditions, grid order
    std::vector<int> periods;             // period grid in steps
    std::string rest_condition;
    double dt_months;
    std::vector<SweepEntry> entries;  // condition-major, period-minor
    SimulationTrace control_trace;    // constant rest schedule, computed once
    TraceSummary control_summary;

    const SweepEntry& entry(std::size_t condition_index, std::size_t period_index) const {
        return entries.at(condition_index * periods.size() + period_index);
    }

    const SweepEntry& at(const std::string& condition, int period) const {
        for (const auto& e : entries) {
            if (e.condition == condition && e.period_steps == period) return e;
        }
        throw ValidationError("sweep has no entry (" + condition + ", " +
                              std::to_string(period) + ")");
    }
};

namespace detail {

inline unsigned sweep_thread_cap() {
    if (const char* env = std::getenv("ECMSIM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 0;  // auto
}

}  // namespace detail

// One periodic trace per (intervention, period) plus the rest-only baseline.
// Entries are independent and evaluated in parallel; assembly is keyed by
// grid position, so results are bit-identical for any thread count.
inline SweepResult sweep(const StateDistribution& initial,
                         const std::vector<std::string>& interventions,
                         const std::string& rest, const std::vector<int>& periods, int horizon,
                         double dt_months, const EcmMap& ecms, unsigned max_threads = 0) {
    if (interventions.empty() || periods.empty()) {
        throw ValidationError("sweep needs a non-empty condition and period grid");
    }
    SweepResult result{interventions,
                       periods,
                       rest,
                       dt_months,
                       {},
                       simulate(initial, Schedule::constant(rest, horizon, dt_months), ecms),
                       {}};
    result.control_summary = summarize(result.control_trace);

    const std::size_t jobs = interventions.size() * periods.size();
    std::vector<std::optional<SweepEntry>> slots(jobs);

    auto run_job = [&](std::size_t k) {
        const std::string& cond = interventions[k / periods.size()];
        const int period = periods[k % periods.size()];
        auto trace = simulate(
            initial, Schedule::periodic(cond, period, rest, horizon, dt_months), ecms);
        auto summary = summarize(trace);
        slots[k] = SweepEntry{cond, period, std::move(trace), summary};
    };

    unsigned want = max_threads != 0 ? max_threads : detail::sweep_thread_cap();
    if (want == 0) want = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads = static_cast<unsigned>(
        std::min<std::size_t>(want, jobs));

    if (n_threads <= 1) {
        for (std::size_t k = 0; k < jobs; ++k) run_job(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                try {
                    for (std::size_t k = next.fetch_add(1); k < jobs;
                         k = next.fetch_add(1)) {
                        run_job(k);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    result.entries.reserve(jobs);
    for (auto& slot : slots) result.entries.push_back(std::move(*slot));
    return result;
}

}  // namespace ecmsim
