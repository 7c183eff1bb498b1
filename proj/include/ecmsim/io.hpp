#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecmsim/errors.hpp"
#include "ecmsim/pipeline.hpp"
#include "ecmsim/schedule.hpp"

// Trace/dataset CSV emission, report serialization, and the small file
// plumbing both need (atomic writes, content hashing, number formatting).

namespace ecmsim::io {

// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Fixed significant digits, used for CSV ratio columns.
inline std::string format_sig(double v, int digits = 10) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

inline std::string fnv1a64_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

// Write-temp-then-rename so readers never observe a partial file.
inline void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp" + std::to_string(std::random_device{}());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out.good()) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move temporary into place for " + path);
    }
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// ---- trace / dataset CSV ----------------------------------------------------

inline const char* kCsvHeader =
    "condition,period_steps,period_months,step_index,t_months,"
    "engaged_count,disengaged_count,engaged_ratio\n";

namespace detail {

inline void append_csv_row(std::string& out, const std::string& condition,
                           int period_steps, double dt_months, int step_index,
                           double engaged, double disengaged, double ratio) {
    out += condition;
    out += ',';
    out += std::to_string(period_steps);
    out += ',';
    out += format_sig(period_steps * dt_months);
    out += ',';
    out += std::to_string(step_index);
    out += ',';
    out += format_sig((step_index - 1) * dt_months);
    out += ',';
    out += format_sig(engaged);
    out += ',';
    out += format_sig(disengaged);
    out += ',';
    out += format_sig(ratio);
    out += '\n';
}

}  // namespace detail

// One row per trace step. Non-periodic schedules carry period 0.
inline void emit_trace_csv(const SimulationTrace& trace, const std::string& path) {
    std::string out = kCsvHeader;
    const int period = trace.schedule.period_steps().value_or(0);
    const std::string condition = trace.schedule.condition();
    for (int i = 1; i <= trace.horizon(); ++i) {
        const auto& st = trace.states[static_cast<std::size_t>(i) - 1];
        detail::append_csv_row(out, condition, period, trace.schedule.dt_months(), i,
                               st.count(0), st.count(1),
                               trace.ratios[static_cast<std::size_t>(i) - 1]);
    }
    atomic_write_text(path, out);
}

// The sweep serializes as the long-format analysis dataset: intervention
// traces from step 2 on, baseline blocks per statistics period.
inline void emit_trace_csv(const SweepResult& sweep_result, const std::string& path,
                           pipeline::ControlRows control_rows,
                           int min_stats_period = fixtures::kStatsPeriodMin) {
    const auto records =
        pipeline::trajectory_dataset(sweep_result, control_rows, min_stats_period);
    std::string out = kCsvHeader;
    for (const auto& r : records) {
        detail::append_csv_row(out, r.condition, r.period_steps, sweep_result.dt_months,
                               r.step_index, r.engaged_count, r.disengaged_count,
                               r.ratio);
    }
    atomic_write_text(path, out);
}

struct CsvRow {
    std::string condition;
    int period_steps;
    double period_months;
    int step_index;
    double t_months;
    double engaged_count;
    double disengaged_count;
    double engaged_ratio;
};

inline std::vector<CsvRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV: " + path);
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        CsvRow row;
        std::getline(ss, row.condition, ',');
        std::getline(ss, field, ',');
        row.period_steps = std::stoi(field);
        std::getline(ss, field, ',');
        row.period_months = std::stod(field);
        std::getline(ss, field, ',');
        row.step_index = std::stoi(field);
        std::getline(ss, field, ',');
        row.t_months = std::stod(field);
        std::getline(ss, field, ',');
        row.engaged_count = std::stod(field);
        std::getline(ss, field, ',');
        row.disengaged_count = std::stod(field);
        std::getline(ss, field, ',');
        row.engaged_ratio = std::stod(field);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- report serialization ------------------------------------------------------

enum class ReportFormat { json, text };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "text") return ReportFormat::text;
    throw ValidationError("unknown report format \"" + s + "\" (use json|text)");
}

namespace detail {

inline void render_text(const nlohmann::json& node, const std::string& prefix,
                        std::string& out) {
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            if (value.is_object() || value.is_array()) {
                out += prefix + key + ":\n";
                render_text(value, prefix + "  ", out);
            } else {
                out += prefix + key + ": " + value.dump() + "\n";
            }
        }
    } else if (node.is_array()) {
        std::size_t i = 0;
        for (const auto& value : node) {
            if (value.is_object() || value.is_array()) {
                out += prefix + "- [" + std::to_string(i) + "]\n";
                render_text(value, prefix + "  ", out);
            } else {
                out += prefix + "- " + value.dump() + "\n";
            }
            ++i;
        }
    } else {
        out += prefix + node.dump() + "\n";
    }
}

}  // namespace detail

inline std::string render_report(const nlohmann::json& report, ReportFormat format) {
    if (format == ReportFormat::json) return report.dump(2) + "\n";
    std::string out;
    detail::render_text(report, "", out);
    return out;
}

inline void emit_report(const nlohmann::json& report, const std::string& path,
                        ReportFormat format) {
    atomic_write_text(path, render_report(report, format));
}

// ---- json helpers shared by report builders --------------------------------------

inline nlohmann::json to_json(const stats::TestResult& r) {
    nlohmann::json j{{"test", r.test}, {"statistic", r.statistic}, {"df", r.df}, {"p", r.p}};
    if (r.effect) j[r.effect->name] = r.effect->value;
    return j;
}

inline nlohmann::json to_json(const stats::Coefficient& c) {
    nlohmann::json j{{"name", c.name},         {"estimate", c.estimate}, {"se", c.se},
                     {"statistic", c.statistic}, {"p", c.p},
                     {"ci", nlohmann::json::array({c.ci_low, c.ci_high})}};
    if (c.standardized) j["standardized"] = *c.standardized;
    return j;
}

inline nlohmann::json to_json(const stats::OlsResult& r) {
    nlohmann::json coefs = nlohmann::json::array();
    for (const auto& c : r.coefficients) coefs.push_back(to_json(c));
    nlohmann::json j{{"coefficients", coefs},
                     {"n", r.n},
                     {"df_resid", r.df_resid},
                     {"r2", r.r2},
                     {"adj_r2", r.adj_r2}};
    if (r.f_statistic) {
        j["f"] = {{"statistic", *r.f_statistic},
                  {"df", nlohmann::json::array({r.f_df1, r.f_df2})},
                  {"p", r.f_p}};
    }
    return j;
}

inline nlohmann::json to_json(const stats::LogisticResult& r) {
    nlohmann::json coefs = nlohmann::json::array();
    for (const auto& c : r.coefficients) coefs.push_back(to_json(c));
    return nlohmann::json{{"coefficients", coefs},
                          {"n", r.n},
                          {"iterations", r.iterations},
                          {"log_lik", r.log_lik},
                          {"null_log_lik", r.null_log_lik},
                          {"model_chi2", r.model_chi2},
                          {"model_df", r.model_df},
                          {"model_p", r.model_p},
                          {"mcfadden_r2", r.mcfadden}};
}

inline nlohmann::json to_json(const PeriodicPattern& p) {
    return nlohmann::json{{"period_steps", p.period},
                          {"upper_peak", p.upper_peak},
                          {"lower_peak", p.lower_peak},
                          {"rest_equilibrium", p.rest_equilibrium},
                          {"decay", p.decay}};
}

inline nlohmann::json to_json(const EquilibriumResult& e) {
    return nlohmann::json{{"engaged_ratio", e.tracked_ratio},
                          {"method", to_string(e.method)},
                          {"residual", e.residual}};
}

inline nlohmann::json to_json(const TraceSummary& s) {
    return nlohmann::json{{"mean_ratio", s.mean_ratio},
                          {"std_ratio", s.std_ratio},
                          {"max_ratio", s.max_ratio},
                          {"min_ratio", s.min_ratio},
                          {"converged_peak_high", s.converged_peak_high},
                          {"converged_peak_low", s.converged_peak_low}};
}

}  // namespace ecmsim::io
