// Shared constants, angle reduction helpers and the error taxonomy used
// across the library.  Every angle-valued quantity lives on [0, 2*pi).
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace loschmidt {

inline constexpr double two_pi = 2.0 * std::numbers::pi_v<double>;

// Bad user input (parameters, configs, preconditions).
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// A run would exceed a configured resource budget (grid points, segments).
struct budget_error : std::runtime_error {
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// A fit or comparison could not be carried out on the given data.
struct analysis_error : std::runtime_error {
    explicit analysis_error(const std::string& what) : std::runtime_error(what) {}
};

// Phase-fold binning hit a resonant torus (empty angle bins).
struct resonance_error : analysis_error {
    explicit resonance_error(const std::string& what) : analysis_error(what) {}
};

// Reduce an arbitrary angle to [0, 2*pi).
inline double wrap_angle(double x) {
    double y = std::fmod(x, two_pi);
    if (y < 0.0) y += two_pi;
    if (y >= two_pi) y = 0.0;
    return y;
}

// Reduction for values already within a few turns of the principal range;
// avoids fmod in hot loops and keeps rounding at the 2*pi scale.
inline double wrap_near(double x) {
    while (x >= two_pi) x -= two_pi;
    while (x < 0.0) x += two_pi;
    return x;
}

}  // namespace loschmidt
