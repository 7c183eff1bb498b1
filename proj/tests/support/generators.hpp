#pragma once

#include <random>
#include <string>
#include <vector>

#include "ecmsim/core.hpp"

// Deterministic generators for property-style tests.

namespace ecmsim::testgen {

inline StateSpace numbered_space(std::size_t p) {
    std::vector<std::string> labels;
    labels.reserve(p);
    for (std::size_t i = 0; i < p; ++i) labels.push_back("s" + std::to_string(i));
    return StateSpace(std::move(labels));
}

// Strictly positive column-stochastic matrix.
inline TransitionMatrix random_stochastic(std::mt19937& rng, std::size_t p,
                                          const std::string& name = "random") {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    std::vector<double> m(p * p);
    for (std::size_t from = 0; from < p; ++from) {
        double sum = 0.0;
        for (std::size_t to = 0; to < p; ++to) {
            m[to * p + from] = unif(rng);
            sum += m[to * p + from];
        }
        for (std::size_t to = 0; to < p; ++to) m[to * p + from] /= sum;
    }
    return TransitionMatrix(numbered_space(p), std::move(m), name);
}

inline StateDistribution random_distribution(std::mt19937& rng, std::size_t p) {
    std::uniform_real_distribution<double> unif(0.5, 200.0);
    std::vector<double> counts(p);
    for (auto& c : counts) c = unif(rng);
    return StateDistribution(numbered_space(p), std::move(counts));
}

}  // namespace ecmsim::testgen
