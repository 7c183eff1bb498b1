#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "ecmsim/core.hpp"
#include "ecmsim/linalg.hpp"

// Closed-form and numerical fixed-point analysis: equilibrium distributions,
// the spectral decay rate, and the converged peak pattern under periodic
// intervention schedules.

namespace ecmsim {

enum class EquilibriumMethod { closed_form_2state, linear_solve, power_iteration };

inline const char* to_string(EquilibriumMethod m) {
    switch (m) {
        case EquilibriumMethod::closed_form_2state: return "closed_form_2state";
        case EquilibriumMethod::linear_solve: return "linear_solve";
        case EquilibriumMethod::power_iteration: return "power_iteration";
    }
    return "?";
}

struct EquilibriumResult {
    StateDistribution distribution;  // normalized to ratios (total 1)
    double tracked_ratio;            // share of the tracked (first) state
    EquilibriumMethod method;
    double residual;                 // L-inf norm of step(v) - v
};

namespace detail {

constexpr double kPowerIterTolerance = 1e-13;  // L1 distance between iterates
constexpr std::size_t kPowerIterCap = 1000000;

inline double fixed_point_residual(const TransitionMatrix& m, const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t to = 0; to < m.dim(); ++to) {
        double acc = 0.0;
        for (std::size_t from = 0; from < m.dim(); ++from) acc += m.at(to, from) * v[from];
        worst = std::max(worst, std::abs(acc - v[to]));
    }
    return worst;
}

// Power iteration from the uniform vector. Throws on non-convergence.
inline std::vector<double> power_iteration(const TransitionMatrix& m) {
    const std::size_t p = m.dim();
    std::vector<double> v(p, 1.0 / static_cast<double>(p));
    std::vector<double> next(p);
    for (std::size_t iter = 0; iter < kPowerIterCap; ++iter) {
        double sum = 0.0;
        for (std::size_t to = 0; to < p; ++to) {
            double acc = 0.0;
            for (std::size_t from = 0; from < p; ++from) acc += m.at(to, from) * v[from];
            next[to] = acc;
            sum += acc;
        }
        for (double& x : next) x /= sum;
        double l1 = 0.0;
        for (std::size_t i = 0; i < p; ++i) l1 += std::abs(next[i] - v[i]);
        v.swap(next);
        if (l1 <= kPowerIterTolerance) return v;
    }
    throw NumericError("power iteration did not converge for \"" + m.condition() + "\"");
}

// Transitive closure of the positive-probability digraph (edge j -> i when
// m(i, j) > 0), including trivial self-reachability.
inline std::vector<bool> reachability(const TransitionMatrix& m) {
    const std::size_t p = m.dim();
    std::vector<bool> reach(p * p, false);
    for (std::size_t i = 0; i < p; ++i) {
        reach[i * p + i] = true;
        for (std::size_t j = 0; j < p; ++j) {
            if (m.at(j, i) > 0.0) reach[i * p + j] = true;  // i -> j
        }
    }
    for (std::size_t k = 0; k < p; ++k)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                if (reach[i * p + k] && reach[k * p + j]) reach[i * p + j] = true;
    return reach;
}

// Recurrent (closed) communicating classes, as lists of state indices.
inline std::vector<std::vector<std::size_t>> closed_classes(const TransitionMatrix& m) {
    const std::size_t p = m.dim();
    const auto reach = reachability(m);
    std::vector<bool> seen(p, false);
    std::vector<std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < p; ++i) {
        if (seen[i]) continue;
        std::vector<std::size_t> cls;
        for (std::size_t j = 0; j < p; ++j) {
            if (reach[i * p + j] && reach[j * p + i]) cls.push_back(j);
        }
        bool closed = true;
        for (std::size_t u : cls) {
            for (std::size_t v = 0; v < p; ++v) {
                if (m.at(v, u) > 0.0 && !(reach[v * p + u] && reach[u * p + v])) {
                    closed = false;
                }
            }
        }
        if (closed) {
            for (std::size_t u : cls) seen[u] = true;
            classes.push_back(std::move(cls));
        } else {
            seen[i] = true;
        }
    }
    return classes;
}

// Period of an irreducible class: gcd of (level[u] + 1 - level[v]) over its
// edges, with BFS levels from an arbitrary member.
inline std::size_t class_period(const TransitionMatrix& m,
                                const std::vector<std::size_t>& cls) {
    const std::size_t p = m.dim();
    std::vector<long> level(p, -1);
    std::vector<std::size_t> queue{cls.front()};
    level[cls.front()] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t u = queue[head];
        for (std::size_t v : cls) {
            if (m.at(v, u) > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    long g = 0;
    for (std::size_t u : cls) {
        for (std::size_t v : cls) {
            if (m.at(v, u) > 0.0) g = std::gcd(g, level[u] + 1 - level[v]);
        }
    }
    return g == 0 ? 1 : static_cast<std::size_t>(std::abs(g));
}

// Second-largest eigenvalue modulus via power iteration deflated onto the
// sum-zero subspace (orthogonal to the dominant left eigenvector). Converges
// for a real sub-dominant eigenvalue; a dominant complex pair is reported as
// non-convergence.
inline double second_eigenvalue_modulus(const TransitionMatrix& m) {
    const std::size_t p = m.dim();
    std::vector<double> v(p);
    for (std::size_t i = 0; i < p; ++i) v[i] = (i % 2 == 0 ? 1.0 : -1.0) + 1.0 / (i + 2.0);

    auto project = [&](std::vector<double>& x) {
        double mean = 0.0;
        for (double t : x) mean += t;
        mean /= static_cast<double>(p);
        for (double& t : x) t -= mean;
    };
    project(v);

    double lambda = 0.0;
    std::vector<double> next(p);
    const std::size_t cap = 100000;
    for (std::size_t iter = 0; iter < cap; ++iter) {
        double norm2 = 0.0;
        for (std::size_t to = 0; to < p; ++to) {
            double acc = 0.0;
            for (std::size_t from = 0; from < p; ++from) acc += m.at(to, from) * v[from];
            next[to] = acc;
            norm2 += v[to] * v[to];
        }
        project(next);
        if (norm2 == 0.0) return 0.0;  // nilpotent deflated part
        // Rayleigh quotient keeps the sign, so negative eigenvalues converge too
        double rq = 0.0;
        for (std::size_t i = 0; i < p; ++i) rq += v[i] * next[i];
        rq /= norm2;

        double scale = 0.0;
        for (double x : next) scale = std::max(scale, std::abs(x));
        if (scale == 0.0) return 0.0;
        for (double& x : next) x /= scale;
        v.swap(next);

        if (iter > 2 && std::abs(rq - lambda) <= kPowerIterTolerance) {
            return std::abs(rq);
        }
        lambda = rq;
    }
    throw NumericError(
        "second-eigenvalue iteration did not converge (complex sub-dominant pair?)");
}

}  // namespace detail

// Probability of entering / leaving the tracked state, the two numbers that
// drive every 2-state closed form.
struct TwoStateRates {
    double become_tracked;  // q: off-diagonal into state 0
    double leave_tracked;   // r: off-diagonal out of state 0
};

inline TwoStateRates two_state_rates(const TransitionMatrix& m) {
    if (m.dim() != 2) {
        throw ValidationError("two_state_rates requires a 2-state matrix");
    }
    return {m.at(0, 1), m.at(1, 0)};
}

// Stationary distribution of the step operator.
//
// 2 states: x = q / (q + r). More states: solve (M - I)v = 0 with sum(v) = 1,
// falling back to power iteration when the bordered system is singular.
// A chain without a unique attracting equilibrium is an error, never a
// silently returned vector.
inline EquilibriumResult equilibrium(const TransitionMatrix& matrix) {
    const std::size_t p = matrix.dim();
    if (p == 2) {
        const auto [q, r] = two_state_rates(matrix);
        const double lambda = 1.0 - q - r;  // trace - 1
        if (q + r <= 0.0 || std::abs(lambda) >= 1.0 - 1e-12) {
            throw NumericError("no unique attracting equilibrium for \"" +
                               matrix.condition() + "\" (|decay| = " +
                               std::to_string(std::abs(lambda)) + ")");
        }
        const double x = q / (q + r);
        StateDistribution dist(matrix.space(), {x, 1.0 - x});
        return {dist, x, EquilibriumMethod::closed_form_2state,
                detail::fixed_point_residual(matrix, dist.counts())};
    }

    // Uniqueness and convergence are decided combinatorially: exactly one
    // closed communicating class, and that class must be aperiodic.
    const auto classes = detail::closed_classes(matrix);
    if (classes.size() != 1) {
        throw NumericError("no unique equilibrium for \"" + matrix.condition() +
                           "\": chain has " + std::to_string(classes.size()) +
                           " closed classes");
    }
    if (detail::class_period(matrix, classes.front()) != 1) {
        throw NumericError("no attracting equilibrium for \"" + matrix.condition() +
                           "\": recurrent class is periodic");
    }

    // bordered system: rows of (M - I) with the last row replaced by 1s
    linalg::Matrix a(p, p);
    std::vector<double> b(p, 0.0);
    for (std::size_t i = 0; i + 1 < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            a(i, j) = matrix.at(i, j) - (i == j ? 1.0 : 0.0);
        }
    }
    for (std::size_t j = 0; j < p; ++j) a(p - 1, j) = 1.0;
    b[p - 1] = 1.0;

    auto solved = linalg::solve(a, b);
    EquilibriumMethod method = EquilibriumMethod::linear_solve;
    std::vector<double> v;
    if (solved) {
        v = std::move(*solved);
        for (double x : v) {
            if (!(x >= -1e-9)) solved.reset();  // negative "equilibrium": not a distribution
        }
    }
    if (!solved) {
        v = detail::power_iteration(matrix);
        method = EquilibriumMethod::power_iteration;
    }
    for (double& x : v) x = std::max(x, 0.0);
    StateDistribution dist(matrix.space(), v);
    const double residual = detail::fixed_point_residual(matrix, v);
    if (residual > 1e-10) {
        throw NumericError("equilibrium residual " + std::to_string(residual) +
                           " too large for \"" + matrix.condition() + "\"");
    }
    return {dist, v[0] / dist.total(), method, residual};
}

// Spectral decay rate toward equilibrium. Closed form trace - 1 for 2 states,
// second-largest eigenvalue modulus otherwise.
inline double decay_rate(const TransitionMatrix& matrix) {
    if (matrix.dim() == 2) {
        return matrix.at(0, 0) + matrix.at(1, 1) - 1.0;
    }
    return detail::second_eigenvalue_modulus(matrix);
}

// Converged oscillation pattern under a periodic schedule on 2 states.
struct PeriodicPattern {
    int period;              // steps between interventions
    double upper_peak;       // a: tracked ratio just after an intervention
    double lower_peak;       // b: tracked ratio just before the next one
    double rest_equilibrium; // e: fixed point of the rest matrix
    double decay;            // lambda of the rest matrix
};

// Solves   b - e = (a - e) * lambda^(T-1)
//          a = q_I + (1 - q_I - r_I) * b
// for the converged peaks of a rest/intervention cycle of length T.
inline PeriodicPattern periodic_peaks(const TransitionMatrix& rest,
                                      const TransitionMatrix& intervention, int period) {
    if (rest.dim() != 2 || intervention.dim() != 2) {
        throw ValidationError("periodic_peaks handles 2-state chains only");
    }
    if (rest.space() != intervention.space()) {
        throw ValidationError("periodic_peaks: rest and intervention spaces differ");
    }
    if (period < 1) {
        throw ValidationError("period must be >= 1");
    }
    const double e = equilibrium(rest).tracked_ratio;
    const double lambda = decay_rate(rest);
    const auto [qi, ri] = two_state_rates(intervention);
    const double shrink = 1.0 - qi - ri;

    const double lt = std::pow(lambda, period - 1);
    const double denom = 1.0 - shrink * lt;
    if (std::abs(denom) < 1e-14) {
        throw NumericError("periodic peak system is singular (period " +
                           std::to_string(period) + ")");
    }
    const double b = (e * (1.0 - lt) + qi * lt) / denom;
    const double a = qi + shrink * b;
    return {period, a, b, e, lambda};
}

}  // namespace ecmsim
