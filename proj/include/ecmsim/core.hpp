#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ecmsim/errors.hpp"

// State spaces, transition-count ingestion, column-stochastic transition
// matrices, and the single-step distribution update.
//
// Conventions used throughout the library:
//   * matrices are column-stochastic, m(to, from) = Pr(next = to | current = from);
//   * the first label of a state space is the "tracked" state whose population
//     share is reported as a ratio;
//   * distributions carry expected counts (fractional reals), never sampled
//     individuals.

namespace ecmsim {

inline constexpr double kStochasticTolerance = 1e-12;

// Ordered, unique, non-empty state names. Index 0 is the tracked state.
class StateSpace {
public:
    explicit StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.size() < 2) {
            throw ValidationError("state space needs at least 2 states, got " +
                                  std::to_string(labels_.size()));
        }
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i].empty()) {
                throw ValidationError("state label " + std::to_string(i) + " is empty");
            }
            for (std::size_t j = i + 1; j < labels_.size(); ++j) {
                if (labels_[i] == labels_[j]) {
                    throw ValidationError("duplicate state label \"" + labels_[i] + "\"");
                }
            }
        }
    }

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }

    std::size_t index_of(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) {
            throw ValidationError("unknown state \"" + label + "\"");
        }
        return static_cast<std::size_t>(it - labels_.begin());
    }

    bool operator==(const StateSpace& other) const { return labels_ == other.labels_; }
    bool operator!=(const StateSpace& other) const { return !(*this == other); }

private:
    std::vector<std::string> labels_;
};

// Observed subject moves, n(to, from) = subjects seen in column state at t
// that were in row state at t+1.
class TransitionCounts {
public:
    TransitionCounts(StateSpace space, std::vector<std::int64_t> counts, std::string condition)
        : space_(std::move(space)), n_(std::move(counts)), condition_(std::move(condition)) {
        const std::size_t p = space_.size();
        if (n_.size() != p * p) {
            throw ValidationError("count table for \"" + condition_ + "\" must be " +
                                  std::to_string(p) + "x" + std::to_string(p));
        }
        for (auto v : n_) {
            if (v < 0) {
                throw ValidationError("negative transition count in \"" + condition_ + "\"");
            }
        }
    }

    const StateSpace& space() const { return space_; }
    const std::string& condition() const { return condition_; }
    std::int64_t at(std::size_t to, std::size_t from) const {
        return n_.at(to * space_.size() + from);
    }

    std::int64_t column_sum(std::size_t from) const {
        std::int64_t s = 0;
        for (std::size_t to = 0; to < space_.size(); ++to) s += at(to, from);
        return s;
    }

private:
    StateSpace space_;
    std::vector<std::int64_t> n_;
    std::string condition_;
};

// Orientation of an externally supplied probability matrix.
enum class Orientation {
    rows_are_to,    // internal convention, column-stochastic
    rows_are_from,  // row-stochastic input, transposed at the boundary
};

// Column-stochastic transition matrix for one intervention condition.
//
// Construction does not re-validate probabilities; generated matrices are
// exact by construction and external input is gated through validated().
class TransitionMatrix {
public:
    TransitionMatrix(StateSpace space, std::vector<double> values, std::string condition,
                     Orientation orientation = Orientation::rows_are_to)
        : space_(std::move(space)), m_(std::move(values)), condition_(std::move(condition)) {
        const std::size_t p = space_.size();
        if (m_.size() != p * p) {
            throw ValidationError("matrix for \"" + condition_ + "\" must be " +
                                  std::to_string(p) + "x" + std::to_string(p));
        }
        if (orientation == Orientation::rows_are_from) {
            std::vector<double> t(m_.size());
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j) t[i * p + j] = m_[j * p + i];
            m_ = std::move(t);
        }
    }

    const StateSpace& space() const { return space_; }
    const std::string& condition() const { return condition_; }
    std::size_t dim() const { return space_.size(); }

    double at(std::size_t to, std::size_t from) const { return m_.at(to * dim() + from); }
    const std::vector<double>& values() const { return m_; }

    double column_sum(std::size_t from) const {
        double s = 0.0;
        for (std::size_t to = 0; to < dim(); ++to) s += at(to, from);
        return s;
    }

    // Throws ValidationError unless the matrix passes the stochasticity check.
    const TransitionMatrix& validated() const;

private:
    StateSpace space_;
    std::vector<double> m_;
    std::string condition_;
};

// Expected subject counts per state. Fractional values are the norm here.
class StateDistribution {
public:
    StateDistribution(StateSpace space, std::vector<double> counts)
        : space_(std::move(space)), counts_(std::move(counts)) {
        if (counts_.size() != space_.size()) {
            throw ValidationError("distribution needs one count per state");
        }
        double total = 0.0;
        for (double c : counts_) {
            if (!(c >= 0.0)) {
                throw ValidationError("distribution counts must be nonnegative finite");
            }
            total += c;
        }
        if (!(total > 0.0)) {
            throw ValidationError("distribution total must be positive");
        }
    }

    const StateSpace& space() const { return space_; }
    const std::vector<double>& counts() const { return counts_; }
    double count(std::size_t i) const { return counts_.at(i); }
    double count(const std::string& label) const { return counts_.at(space_.index_of(label)); }

    double total() const { return std::accumulate(counts_.begin(), counts_.end(), 0.0); }

    // Population share of the tracked (first) state.
    double tracked_ratio() const { return counts_[0] / total(); }

private:
    StateSpace space_;
    std::vector<double> counts_;
};

// Report-valued stochasticity check.
struct StochasticReport {
    struct ColumnIssue {
        std::size_t column;
        double sum;
    };
    struct EntryIssue {
        std::size_t to;
        std::size_t from;
        double value;
    };

    bool pass = true;
    double tolerance = kStochasticTolerance;
    std::vector<ColumnIssue> bad_columns;
    std::vector<EntryIssue> bad_entries;

    std::string describe() const {
        if (pass) return "pass";
        std::ostringstream out;
        out << "fail:";
        for (const auto& c : bad_columns) {
            out << " column " << c.column << " sum " << c.sum << ";";
        }
        for (const auto& e : bad_entries) {
            out << " entry (" << e.to << "," << e.from << ") = " << e.value
                << " outside [0,1];";
        }
        return out.str();
    }
};

inline StochasticReport validate_stochastic(const TransitionMatrix& matrix,
                                            double tolerance = kStochasticTolerance) {
    StochasticReport report;
    report.tolerance = tolerance;
    const std::size_t p = matrix.dim();
    for (std::size_t from = 0; from < p; ++from) {
        const double sum = matrix.column_sum(from);
        if (std::abs(sum - 1.0) > tolerance) {
            report.bad_columns.push_back({from, sum});
        }
        for (std::size_t to = 0; to < p; ++to) {
            const double v = matrix.at(to, from);
            if (!(v >= 0.0 && v <= 1.0)) {
                report.bad_entries.push_back({to, from, v});
            }
        }
    }
    report.pass = report.bad_columns.empty() && report.bad_entries.empty();
    return report;
}

inline const TransitionMatrix& TransitionMatrix::validated() const {
    const auto report = validate_stochastic(*this);
    if (!report.pass) {
        throw ValidationError("matrix for \"" + condition_ +
                              "\" is not column-stochastic: " + report.describe());
    }
    return *this;
}

// Maximum-likelihood transition probabilities from observed counts:
// each column of counts is normalized by its own total.
inline TransitionMatrix ecm_from_counts(const TransitionCounts& counts) {
    const std::size_t p = counts.space().size();
    std::vector<double> m(p * p);
    for (std::size_t from = 0; from < p; ++from) {
        const std::int64_t total = counts.column_sum(from);
        if (total <= 0) {
            throw ValidationError("cannot estimate \"" + counts.condition() +
                                  "\": no observations leaving state \"" +
                                  counts.space().label(from) + "\"");
        }
        for (std::size_t to = 0; to < p; ++to) {
            m[to * p + from] =
                static_cast<double>(counts.at(to, from)) / static_cast<double>(total);
        }
    }
    return TransitionMatrix(counts.space(), std::move(m), counts.condition());
}

// One forward step: counts'[to] = sum_from m(to, from) * counts[from].
// Column stochasticity makes this conserve the population total.
inline StateDistribution step(const StateDistribution& dist, const TransitionMatrix& matrix) {
    if (dist.space() != matrix.space()) {
        throw ValidationError("state space mismatch: distribution over " +
                              std::to_string(dist.space().size()) +
                              " states, matrix \"" + matrix.condition() + "\" over " +
                              std::to_string(matrix.space().size()));
    }
    const std::size_t p = dist.space().size();
    std::vector<double> next(p, 0.0);
    for (std::size_t to = 0; to < p; ++to) {
        double acc = 0.0;
        for (std::size_t from = 0; from < p; ++from) {
            acc += matrix.at(to, from) * dist.count(from);
        }
        next[to] = acc;
    }
    return StateDistribution(dist.space(), std::move(next));
}

// Matrix product b*a, i.e. "apply a first, then b".
inline TransitionMatrix multiply(const TransitionMatrix& b, const TransitionMatrix& a) {
    if (a.space() != b.space()) {
        throw ValidationError("state space mismatch in matrix product");
    }
    const std::size_t p = a.dim();
    std::vector<double> m(p * p, 0.0);
    for (std::size_t to = 0; to < p; ++to)
        for (std::size_t from = 0; from < p; ++from) {
            double acc = 0.0;
            for (std::size_t k = 0; k < p; ++k) acc += b.at(to, k) * a.at(k, from);
            m[to * p + from] = acc;
        }
    return TransitionMatrix(a.space(), std::move(m),
                            b.condition() + "*" + a.condition());
}

// Entry-wise rounding, used for the published two-decimal parameter mode.
inline TransitionMatrix rounded_to_decimals(const TransitionMatrix& matrix, int decimals = 2) {
    const double scale = std::pow(10.0, decimals);
    std::vector<double> m = matrix.values();
    for (double& v : m) v = std::round(v * scale) / scale;
    return TransitionMatrix(matrix.space(), std::move(m), matrix.condition());
}

}  // namespace ecmsim
