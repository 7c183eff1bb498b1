#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecmsim/core.hpp"
#include "ecmsim/pipeline.hpp"
#include "ecmsim/schedule.hpp"

// JSON project configuration. Conditions are defined either by a transition
// count table (preferred, keeps probabilities exact) or by a probability
// matrix with an explicit orientation flag; matrices that fail the
// stochasticity check are rejected, never renormalized.
//
// Schema sketch:
//   {
//     "states": ["engaged", "disengaged"],
//     "dt_months": 1.5,
//     "horizon": 100,
//     "initial": {"engaged": 127, "disengaged": 111},
//     "conditions": {
//       "attainable": {"counts": [[36, 14], [4, 18]]},
//       "control":    {"matrix": [[0.72, 0.29], [0.28, 0.71]], "rows_are": "to"}
//     },
//     "schedules": {
//       "baseline":  {"type": "constant", "condition": "control"},
//       "quarterly": {"type": "periodic", "intervention": "attainable",
//                     "period_steps": 2, "rest": "control"},
//       "mixed":     {"type": "explicit", "labels": ["attainable", "control"]}
//     },
//     "sweep": {"interventions": ["attainable"], "rest": "control",
//               "periods": {"from": 1, "to": 50}},
//     "analysis": {"stats_min_period": 2, "control_rows": "code_faithful",
//                  "family_size": 3}
//   }
// states, initial and conditions are required; the rest defaults as above.

namespace ecmsim {

struct ProjectConfig {
    StateSpace space;
    double dt_months = 1.5;
    int horizon = 100;
    StateDistribution initial;
    EcmMap conditions;
    std::map<std::string, Schedule> schedules;
    std::vector<std::string> sweep_interventions;
    std::string sweep_rest;
    std::vector<int> sweep_periods;
    int stats_min_period = 2;
    int family_size = 3;
    pipeline::ControlRows control_rows = pipeline::ControlRows::code_faithful;
};

namespace detail {

class ConfigReader {
public:
    explicit ConfigReader(const nlohmann::json& root) : root_(root) {}

    ProjectConfig read() {
        auto space = read_space();
        auto initial = read_initial(space);
        ProjectConfig config{space.value_or(StateSpace({"a", "b"})),
                             1.5,
                             100,
                             initial.value_or(StateDistribution(
                                 StateSpace({"a", "b"}), {1.0, 1.0})),
                             {},
                             {},
                             {},
                             "",
                             {},
                             2,
                             3,
                             pipeline::ControlRows::code_faithful};
        read_scalars(config);
        if (space) read_conditions(config);
        if (space) read_schedules(config);
        read_sweep(config);
        read_analysis(config);
        if (!issues_.empty()) {
            throw ConfigError("invalid configuration", issues_);
        }
        return config;
    }

private:
    void issue(const std::string& where, const std::string& what) {
        issues_.push_back(where + ": " + what);
    }

    std::optional<StateSpace> read_space() {
        if (!root_.contains("states") || !root_["states"].is_array()) {
            issue("/states", "required array of state labels");
            return std::nullopt;
        }
        std::vector<std::string> labels;
        for (const auto& v : root_["states"]) {
            if (!v.is_string()) {
                issue("/states", "labels must be strings");
                return std::nullopt;
            }
            labels.push_back(v.get<std::string>());
        }
        try {
            return StateSpace(labels);
        } catch (const ValidationError& e) {
            issue("/states", e.what());
            return std::nullopt;
        }
    }

    std::optional<StateDistribution> read_initial(const std::optional<StateSpace>& space) {
        if (!space) return std::nullopt;
        if (!root_.contains("initial") || !root_["initial"].is_object()) {
            issue("/initial", "required object mapping state label to count");
            return std::nullopt;
        }
        std::vector<double> counts(space->size(), 0.0);
        for (const auto& [key, value] : root_["initial"].items()) {
            if (!value.is_number()) {
                issue("/initial/" + key, "count must be a number");
                return std::nullopt;
            }
            try {
                counts[space->index_of(key)] = value.get<double>();
            } catch (const ValidationError&) {
                issue("/initial/" + key, "not a declared state");
                return std::nullopt;
            }
        }
        try {
            return StateDistribution(*space, counts);
        } catch (const ValidationError& e) {
            issue("/initial", e.what());
            return std::nullopt;
        }
    }

    void read_scalars(ProjectConfig& config) {
        if (root_.contains("dt_months")) {
            if (!root_["dt_months"].is_number() || root_["dt_months"].get<double>() <= 0.0) {
                issue("/dt_months", "must be a positive number");
            } else {
                config.dt_months = root_["dt_months"].get<double>();
            }
        }
        if (root_.contains("horizon")) {
            if (!root_["horizon"].is_number_integer() || root_["horizon"].get<int>() < 1) {
                issue("/horizon", "must be an integer >= 1");
            } else {
                config.horizon = root_["horizon"].get<int>();
            }
        }
    }

    void read_conditions(ProjectConfig& config) {
        if (!root_.contains("conditions") || !root_["conditions"].is_object() ||
            root_["conditions"].empty()) {
            issue("/conditions", "required non-empty object");
            return;
        }
        const std::size_t p = config.space.size();
        for (const auto& [name, spec] : root_["conditions"].items()) {
            const std::string where = "/conditions/" + name;
            if (!spec.is_object()) {
                issue(where, "must be an object");
                continue;
            }
            const bool has_counts = spec.contains("counts");
            const bool has_matrix = spec.contains("matrix");
            if (has_counts == has_matrix) {
                issue(where, "define exactly one of \"counts\" or \"matrix\"");
                continue;
            }
            Orientation orientation = Orientation::rows_are_to;
            if (spec.contains("rows_are")) {
                const std::string flag = spec["rows_are"].get<std::string>();
                if (flag == "to") {
                    orientation = Orientation::rows_are_to;
                } else if (flag == "from") {
                    orientation = Orientation::rows_are_from;
                } else {
                    issue(where + "/rows_are", "must be \"to\" or \"from\"");
                    continue;
                }
            }
            const auto& grid = spec[has_counts ? "counts" : "matrix"];
            if (!grid.is_array() || grid.size() != p) {
                issue(where, "needs a " + std::to_string(p) + "x" + std::to_string(p) +
                                 " array");
                continue;
            }
            bool shape_ok = true;
            for (const auto& grid_row : grid) {
                if (!grid_row.is_array() || grid_row.size() != p) shape_ok = false;
            }
            if (!shape_ok) {
                issue(where, "needs a " + std::to_string(p) + "x" + std::to_string(p) +
                                 " array");
                continue;
            }
            try {
                if (has_counts) {
                    std::vector<std::int64_t> counts;
                    counts.reserve(p * p);
                    for (const auto& grid_row : grid)
                        for (const auto& v : grid_row)
                            counts.push_back(v.get<std::int64_t>());
                    TransitionCounts table(config.space, std::move(counts), name);
                    if (orientation == Orientation::rows_are_from) {
                        std::vector<std::int64_t> transposed(p * p);
                        for (std::size_t i = 0; i < p; ++i)
                            for (std::size_t j = 0; j < p; ++j)
                                transposed[j * p + i] = table.at(i, j);
                        table = TransitionCounts(config.space, std::move(transposed), name);
                    }
                    config.conditions.emplace(name, ecm_from_counts(table));
                } else {
                    std::vector<double> values;
                    values.reserve(p * p);
                    for (const auto& grid_row : grid)
                        for (const auto& v : grid_row) values.push_back(v.get<double>());
                    TransitionMatrix m(config.space, std::move(values), name, orientation);
                    config.conditions.emplace(name, m.validated());
                }
            } catch (const Error& e) {
                issue(where, e.what());
            }
        }
    }

    void read_schedules(ProjectConfig& config) {
        if (!root_.contains("schedules")) return;
        if (!root_["schedules"].is_object()) {
            issue("/schedules", "must be an object");
            return;
        }
        for (const auto& [name, spec] : root_["schedules"].items()) {
            const std::string where = "/schedules/" + name;
            try {
                const std::string type = spec.at("type").get<std::string>();
                std::optional<Schedule> schedule;
                if (type == "constant") {
                    schedule = Schedule::constant(spec.at("condition").get<std::string>(),
                                                  config.horizon, config.dt_months);
                } else if (type == "periodic") {
                    schedule = Schedule::periodic(
                        spec.at("intervention").get<std::string>(),
                        spec.at("period_steps").get<int>(),
                        spec.at("rest").get<std::string>(), config.horizon,
                        config.dt_months);
                } else if (type == "explicit") {
                    schedule = Schedule::explicit_labels(
                        spec.at("labels").get<std::vector<std::string>>(),
                        config.dt_months);
                } else {
                    issue(where + "/type", "must be constant|periodic|explicit");
                    continue;
                }
                schedule->validate_against(config.conditions);
                config.schedules.emplace(name, *schedule);
            } catch (const nlohmann::json::exception& e) {
                issue(where, e.what());
            } catch (const ValidationError& e) {
                issue(where, e.what());
            }
        }
    }

    void read_sweep(ProjectConfig& config) {
        config.sweep_interventions.clear();
        if (!root_.contains("sweep")) {
            for (const auto& [name, m] : config.conditions) {
                (void)m;
                config.sweep_interventions.push_back(name);
            }
            return;
        }
        const auto& sweep = root_["sweep"];
        try {
            if (sweep.contains("interventions")) {
                config.sweep_interventions =
                    sweep["interventions"].get<std::vector<std::string>>();
            }
            if (sweep.contains("rest")) {
                config.sweep_rest = sweep["rest"].get<std::string>();
            }
            if (sweep.contains("periods")) {
                const auto& periods = sweep["periods"];
                if (periods.is_array()) {
                    config.sweep_periods = periods.get<std::vector<int>>();
                } else {
                    const int from = periods.at("from").get<int>();
                    const int to = periods.at("to").get<int>();
                    if (from < 1 || to < from) {
                        issue("/sweep/periods", "need 1 <= from <= to");
                    } else {
                        for (int v = from; v <= to; ++v) config.sweep_periods.push_back(v);
                    }
                }
            }
        } catch (const nlohmann::json::exception& e) {
            issue("/sweep", e.what());
            return;
        }
        for (const auto& name : config.sweep_interventions) {
            if (config.conditions.find(name) == config.conditions.end()) {
                issue("/sweep/interventions", "unknown condition \"" + name + "\"");
            }
        }
        if (!config.sweep_rest.empty() &&
            config.conditions.find(config.sweep_rest) == config.conditions.end()) {
            issue("/sweep/rest", "unknown condition \"" + config.sweep_rest + "\"");
        }
    }

    void read_analysis(ProjectConfig& config) {
        if (!root_.contains("analysis")) return;
        const auto& analysis = root_["analysis"];
        try {
            if (analysis.contains("stats_min_period")) {
                config.stats_min_period = analysis["stats_min_period"].get<int>();
                if (config.stats_min_period < 1) {
                    issue("/analysis/stats_min_period", "must be >= 1");
                }
            }
            if (analysis.contains("family_size")) {
                config.family_size = analysis["family_size"].get<int>();
                if (config.family_size < 1) issue("/analysis/family_size", "must be >= 1");
            }
            if (analysis.contains("control_rows")) {
                config.control_rows = pipeline::control_rows_from_string(
                    analysis["control_rows"].get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            issue("/analysis", e.what());
        } catch (const ValidationError& e) {
            issue("/analysis/control_rows", e.what());
        }
    }

    const nlohmann::json& root_;
    std::vector<std::string> issues_;
};

}  // namespace detail

inline ProjectConfig parse_config(const nlohmann::json& root) {
    if (!root.is_object()) {
        throw ConfigError("invalid configuration", {"top level must be a JSON object"});
    }
    return detail::ConfigReader(root).read();
}

inline ProjectConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("cannot parse " + path, {e.what()});
    }
    return parse_config(root);
}

}  // namespace ecmsim
