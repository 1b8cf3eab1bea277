// Semiclassical fidelity predictors and the associated time scales.
//
// The chain implemented here:
//   * m_sc(t): stationary-packet p0 integral of exp[i sigma dS/eps] against
//     the Gaussian momentum weight (trapezoid quadrature on a uniform grid).
//   * M_sc1(t) = exp[-(sigma w_p k_p)^2 / 2], the linear-in-p0 law valid
//     until tau1.
//   * M_sc2(t), the uniform second-order formula interpolating between the
//     Gaussian decay and the 1/t power law.
//   * The segment decomposition of the same integral once S_f resolves
//     within the packet window (t >> tau_s), with the non-decaying
//     one-period factor F(t).
//   * tau1, tau_s, plateau end time, the Gaussian -> power-law crossover,
//     and the folded decay rate beta(sigma).
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <thread>
#include <vector>

#include "loschmidt/classical.hpp"
#include "loschmidt/common.hpp"
#include "loschmidt/model.hpp"

namespace loschmidt {

using cplx = std::complex<double>;

struct SemiclassicalSeries {
    std::vector<cplx> m_sc;       // quadrature amplitude
    std::vector<double> m_sc1;    // Gaussian law
    std::vector<double> m_sc2;    // uniform second-order law
};

// Controls for the p0 quadrature grid.  The S_f oscillation in p0 has
// wavelength 2*pi/(nu' t), so the spacing shrinks with t_max to keep at
// least ten points per oscillation; nu_prime supplies that scale.
struct GridControl {
    double span_in_wp = 5.0;
    double nu_prime = 1.0;
    std::size_t max_points = 400000;
    double dp_override = 0.0;  // > 0 forces the spacing (refinement studies)
    int jobs = 1;
};

namespace detail {

// Deterministic block-parallel accumulation: the grid is cut into
// fixed-size blocks, each block is summed left to right, and block sums
// are combined in index order, so the result is bitwise independent of
// the number of worker threads.
template <typename BlockFn>
void for_each_block(std::size_t n_items, std::size_t block_size, int jobs, BlockFn&& fn) {
    const std::size_t n_blocks = (n_items + block_size - 1) / block_size;
    if (jobs <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            fn(b, b * block_size, std::min(n_items, (b + 1) * block_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b, b * block_size, std::min(n_items, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(n_blocks));
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Semiclassical fidelity amplitude m_sc(t) for t = 0..t_max,
//   m_sc(t) = (pi w_p^2)^(-1/2) Int dp0 exp[i sigma dS/eps(p0,t) - (p0-p0~)^2/w_p^2],
// with every trajectory launched from the packet's r0.
inline std::vector<cplx> m_sc_integral(const PacketSpec& packet, const RotorParams& params,
                                       std::size_t t_max, const GridControl& ctrl = {}) {
    const double span = ctrl.span_in_wp * packet.w_p;
    double dp = std::min(packet.w_p / 50.0,
                         std::numbers::pi_v<double> /
                             (5.0 * std::max(std::abs(ctrl.nu_prime), 1e-3) *
                              static_cast<double>(std::max<std::size_t>(t_max, 1))));
    if (ctrl.dp_override > 0.0) dp = ctrl.dp_override;
    const std::size_t n_pts = static_cast<std::size_t>(std::lround(2.0 * span / dp)) + 1;
    if (n_pts > ctrl.max_points)
        throw budget_error("m_sc_integral: quadrature grid of " + std::to_string(n_pts) +
                           " points exceeds the budget of " + std::to_string(ctrl.max_points) +
                           "; cap t_max or raise GridControl::max_points");
    dp = 2.0 * span / static_cast<double>(n_pts - 1);

    const double norm = dp / (std::sqrt(std::numbers::pi_v<double>) * packet.w_p);
    const std::size_t block = 1024;
    const std::size_t n_blocks = (n_pts + block - 1) / block;
    std::vector<std::vector<cplx>> partial(n_blocks);

    detail::for_each_block(n_pts, block, ctrl.jobs, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        std::vector<cplx> acc(t_max + 1, cplx{0.0, 0.0});
        for (std::size_t i = lo; i < hi; ++i) {
            const double p0 = packet.p0 - span + dp * static_cast<double>(i);
            const double q = p0 - packet.p0;
            const double trap = (i == 0 || i == n_pts - 1) ? 0.5 : 1.0;
            const double g = trap * norm * std::exp(-q * q / (packet.w_p * packet.w_p));
            detail::MapState st{wrap_angle(packet.r0), wrap_angle(p0), 0};
            double action = 0.0;
            acc[0] += g;
            for (std::size_t t = 1; t <= t_max; ++t) {
                action += std::cos(st.r);
                detail::advance(st, params.k);
                acc[t] += g * std::polar(1.0, params.sigma * action);
            }
        }
        partial[b] = std::move(acc);
    });

    std::vector<cplx> m(t_max + 1, cplx{0.0, 0.0});
    for (std::size_t b = 0; b < n_blocks; ++b)
        for (std::size_t t = 0; t <= t_max; ++t) m[t] += partial[b][t];
    return m;
}

// Gaussian law M_sc1(t) = exp[-(sigma w_p k_p(t))^2 / 2] with k_p taken at
// the packet center.
inline std::vector<double> m_sc1_series(const PacketSpec& packet, const RotorParams& params,
                                        const std::vector<double>& k_p) {
    std::vector<double> m(k_p.size());
    for (std::size_t t = 0; t < k_p.size(); ++t) {
        const double x = params.sigma * packet.w_p * k_p[t];
        m[t] = std::exp(-0.5 * x * x);
    }
    return m;
}

// Uniform second-order law
//   M_sc2(t) = 2c / sqrt(4 + (w_p^2 sigma U_I'' t)^2)
//              * exp[-2 (w_p sigma U_I' t)^2 / (4 + (w_p^2 sigma U_I'' t)^2)].
inline std::vector<double> m_sc2_series(const PacketSpec& packet, const RotorParams& params,
                                        const LocalDerivatives& derivs, double c,
                                        std::size_t t_max) {
    std::vector<double> m(t_max + 1);
    const double a = packet.w_p * params.sigma * derivs.u_i_prime;
    const double b = packet.w_p * packet.w_p * params.sigma * derivs.u_i_double_prime;
    for (std::size_t t = 0; t <= t_max; ++t) {
        const double td = static_cast<double>(t);
        const double denom = 4.0 + b * td * b * td;
        m[t] = 2.0 * c / std::sqrt(denom) * std::exp(-2.0 * a * td * a * td / denom);
    }
    return m;
}

// One-period phase factor F(t) of the segment decomposition,
//   F = Int_0^{2 pi} dphi exp[(i sigma / nu) Int_{theta_t}^{theta_t + phi} V],
// evaluated by composite trapezoid on the reconstructed profile with the
// inner cumulative integral precomputed.
inline cplx f_factor(const VProfile& profile, double nu, double sigma, double theta_t,
                     int n_nodes = 512) {
    if (nu == 0.0) throw validation_error("f_factor: nu must be nonzero");
    if (n_nodes < 8) throw validation_error("f_factor: need at least 8 nodes");

    // Cumulative integral of V over one period on the node grid.
    const double dphi = two_pi / n_nodes;
    std::vector<double> cum(n_nodes + 1);
    cum[0] = 0.0;
    for (int q = 0; q < n_nodes; ++q) {
        const double a = profile.at(q * dphi);
        const double b = profile.at((q + 1) * dphi);
        cum[q + 1] = cum[q] + 0.5 * (a + b) * dphi;
    }
    const double full_turn = cum[n_nodes];
    auto cum_at = [&](double x) {
        // linear interpolation of the cumulative integral, periodically extended
        double turns = std::floor(x / two_pi);
        double frac = (x - turns * two_pi) / dphi;
        int idx = static_cast<int>(frac);
        if (idx >= n_nodes) idx = n_nodes - 1;
        const double w = frac - idx;
        return turns * full_turn + cum[idx] * (1.0 - w) + cum[idx + 1] * w;
    };

    const double base = cum_at(theta_t);
    cplx f = 0.0;
    for (int q = 0; q <= n_nodes; ++q) {
        const double phi = q * dphi;
        const double inner = cum_at(theta_t + phi) - base;
        const double trap = (q == 0 || q == n_nodes) ? 0.5 : 1.0;
        f += trap * dphi * std::polar(1.0, sigma / nu * inner);
    }
    return f;
}

// Segment decomposition of m_sc(t): boundaries p_0j where S_f completes
// successive periods, (p_0,j+1 - p_0j) nu_j' t ~= 2*pi.  Boundaries are the
// period crossings of the detrended action residual on a p0 grid; nu(p0)
// is a devil's staircase, so crossings of the residual are far more robust
// than inverting measured frequencies.
struct SegmentControl {
    double span_in_wp = 3.0;             // grid extent on each side of the center
    int points_per_wavelength = 12;      // grid resolution vs the S_f oscillation
    std::size_t freq_steps = 100000;     // orbit length for the center nu, nu'
    std::size_t profile_steps = 100000;
    int profile_bins = 256;
    std::size_t max_points = 2000000;
    std::size_t min_segments_in_window = 8;
    int jobs = 1;
};

struct SegmentSumResult {
    cplx amplitude{0.0, 0.0};
    std::size_t segments_in_window = 0;
    cplx f_factor{0.0, 0.0};
};

namespace detail {

inline double orbit_nu(double r0, double p0, double k, std::size_t steps) {
    const Trajectory traj = evolve_trajectory(make_phase_point(r0, p0), k, steps);
    EstimatorOptions opt;
    opt.min_steps = std::min<std::size_t>(steps, 10000);
    return rotation_number(traj, opt).nu;
}

}  // namespace detail

inline SegmentSumResult segment_sum(const PacketSpec& packet, const RotorParams& params,
                                    std::size_t t, const SegmentControl& ctrl = {}) {
    if (t == 0) throw validation_error("segment_sum: t must be positive");
    const double td = static_cast<double>(t);

    // Center orbit: frequency, profile, and the common factor F(t).
    const Trajectory center =
        evolve_trajectory(make_phase_point(packet.r0, packet.p0), params.k, ctrl.profile_steps);
    const OrbitEstimates center_est = orbit_estimates(center);
    const VProfile profile = reconstruct_V_profile(center, center_est.nu, ctrl.profile_bins);
    const double theta_t = wrap_angle(center_est.nu * td);
    const cplx f_t = f_factor(profile, center_est.nu, params.sigma, theta_t);

    // Frequency slope at the center sets the expected oscillation
    // wavelength; a frequency reversal across W_p is rejected.
    const double h = default_fd_step(packet);
    const double nu_plus = detail::orbit_nu(packet.r0, packet.p0 + h, params.k, ctrl.freq_steps);
    const double nu_minus = detail::orbit_nu(packet.r0, packet.p0 - h, params.k, ctrl.freq_steps);
    const double nu_prime = (nu_plus - nu_minus) / (2.0 * h);
    if (nu_prime == 0.0)
        throw validation_error("segment_sum: nu' vanishes at the packet center (shearless torus)");
    const double nu_lo =
        detail::orbit_nu(packet.r0, packet.p0 - 0.5 * packet.w_p, params.k, ctrl.freq_steps);
    const double nu_hi =
        detail::orbit_nu(packet.r0, packet.p0 + 0.5 * packet.w_p, params.k, ctrl.freq_steps);
    if ((nu_hi - nu_lo) * nu_prime < 0.0)
        throw validation_error(
            "segment_sum: nu' changes sign within the packet window; "
            "segment decomposition undefined here");

    const double wavelength = two_pi / (std::abs(nu_prime) * td);
    const double span = ctrl.span_in_wp * packet.w_p;
    const double dp = wavelength / ctrl.points_per_wavelength;
    const std::size_t n_pts = static_cast<std::size_t>(std::lround(2.0 * span / dp)) + 1;
    if (n_pts > ctrl.max_points)
        throw budget_error("segment_sum: boundary grid of " + std::to_string(n_pts) +
                           " points exceeds the budget; reduce t or the span");

    // dS/eps at the final time on the grid.
    std::vector<double> action(n_pts);
    detail::for_each_block(n_pts, 1024, ctrl.jobs, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double p0 = packet.p0 - span + dp * static_cast<double>(i);
            detail::MapState st{wrap_angle(packet.r0), wrap_angle(p0), 0};
            double sum = 0.0;
            for (std::size_t step = 0; step < t; ++step) {
                sum += std::cos(st.r);
                detail::advance(st, params.k);
            }
            action[i] = sum;
        }
    });

    // S_f residual: subtract the smooth U_I t drift with a one-wavelength
    // moving average, then take upward zero crossings as boundaries.
    const std::size_t w = static_cast<std::size_t>(ctrl.points_per_wavelength) | 1;
    std::vector<double> residual(n_pts);
    {
        const std::size_t half = w / 2;
        for (std::size_t i = 0; i < n_pts; ++i) {
            const std::size_t lo = i > half ? i - half : 0;
            const std::size_t hi = std::min(n_pts - 1, i + half);
            double s = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) s += action[j];
            residual[i] = action[i] - s / static_cast<double>(hi - lo + 1);
        }
    }

    std::vector<double> p_j, action_j;
    for (std::size_t i = 0; i + 1 < n_pts; ++i) {
        if (!(residual[i] <= 0.0 && residual[i + 1] > 0.0)) continue;
        const double frac = -residual[i] / (residual[i + 1] - residual[i]);
        p_j.push_back(packet.p0 - span + dp * (static_cast<double>(i) + frac));
        action_j.push_back(action[i] * (1.0 - frac) + action[i + 1] * frac);
    }

    SegmentSumResult result;
    result.f_factor = f_t;
    for (double v : p_j)
        if (std::abs(v - packet.p0) < packet.w_p) ++result.segments_in_window;
    if (result.segments_in_window < ctrl.min_segments_in_window)
        throw analysis_error("segment_sum: only " + std::to_string(result.segments_in_window) +
                             " segments inside the packet window at t = " + std::to_string(t) +
                             "; use m_sc_integral for early times");

    // m_j = Gauss_j / (sqrt(pi) w_p nu_j' t) * exp(i sigma dS/eps_j) * F(t),
    // with nu_j' t = 2*pi / segment width by construction.
    const double sign = nu_prime > 0.0 ? 1.0 : -1.0;
    cplx sum = 0.0;
    for (std::size_t j = 0; j < p_j.size(); ++j) {
        const double width = (j + 1 < p_j.size()) ? (p_j[j + 1] - p_j[j])
                                                  : (p_j[j] - p_j[j - 1]);
        const double nu_j_prime_t = sign * two_pi / width;
        const double q = p_j[j] - packet.p0;
        const double gauss = std::exp(-q * q / (packet.w_p * packet.w_p));
        sum += gauss / (std::sqrt(std::numbers::pi_v<double>) * packet.w_p * nu_j_prime_t) *
               std::polar(1.0, params.sigma * action_j[j]) * f_t;
    }
    result.amplitude = sum;
    return result;
}

// Time scales separating the decay regimes.
struct TimeScales {
    double tau1 = 0.0;
    bool tau1_is_lower_bound = false;
    double tau_s = 0.0;
    double t_plateau = 0.0;
    double t_crossover = 0.0;  // Gaussian -> 1/t boundary of M_sc2
};

// First time sigma w_p^2 |k_pp(t)| reaches 1, refined by linear
// interpolation between samples.  If the threshold is not reached the
// result is a lower bound at the series end.
inline TimeScales tau1_estimate(const PacketSpec& packet, const RotorParams& params,
                                const std::vector<double>& k_pp) {
    TimeScales scales;
    const double coef = params.sigma * packet.w_p * packet.w_p;
    if (coef <= 0.0) {
        scales.tau1 = std::numeric_limits<double>::infinity();
        scales.tau1_is_lower_bound = true;
        return scales;
    }
    const double threshold = 1.0 / coef;
    for (std::size_t t = 1; t < k_pp.size(); ++t) {
        if (std::abs(k_pp[t]) >= threshold) {
            const double prev = std::abs(k_pp[t - 1]);
            const double cur = std::abs(k_pp[t]);
            scales.tau1 = static_cast<double>(t - 1) + (threshold - prev) / (cur - prev);
            return scales;
        }
    }
    scales.tau1 = static_cast<double>(k_pp.size() - 1);
    scales.tau1_is_lower_bound = true;
    return scales;
}

// tau_s ~= pi / (|nu'| w_p): S_f completes one oscillation inside the window.
inline double tau_s(const PacketSpec& packet, double nu_prime) {
    if (nu_prime == 0.0) return std::numeric_limits<double>::infinity();
    return std::numbers::pi_v<double> / (std::abs(nu_prime) * packet.w_p);
}

// Plateau ends when sigma w_p |U_I'| t ~ pi.
inline double plateau_end_time(const PacketSpec& packet, const RotorParams& params,
                               double u_i_prime) {
    const double denom = params.sigma * packet.w_p * std::abs(u_i_prime);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return std::numbers::pi_v<double> / denom;
}

// M_sc2 crosses from Gaussian to 1/t when (w_p^2 sigma U_I'' t)^2 ~ 4.
inline double crossover_time(const PacketSpec& packet, const RotorParams& params,
                             double u_i_double_prime) {
    const double denom =
        packet.w_p * packet.w_p * params.sigma * std::abs(u_i_double_prime);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 / denom;
}

inline TimeScales make_time_scales(const PacketSpec& packet, const RotorParams& params,
                                   const LocalDerivatives& derivs,
                                   const std::vector<double>& k_pp) {
    TimeScales scales = tau1_estimate(packet, params, k_pp);
    scales.tau_s = tau_s(packet, derivs.nu_prime);
    scales.t_plateau = plateau_end_time(packet, params, derivs.u_i_prime);
    scales.t_crossover = crossover_time(packet, params, derivs.u_i_double_prime);
    return scales;
}

// Folded decay rate beta(sigma) = |sigma U_I' - m nu'| with the integer m
// minimizing the magnitude; beta is |nu'/U_I'|-periodic in sigma and
// bounded by |nu'|/2.
struct BetaCurve {
    std::vector<double> sigma;
    std::vector<double> beta;
    std::vector<long> m;
    double period = 0.0;
};

inline BetaCurve beta_of_sigma(const std::vector<double>& sigma_grid, double u_i_prime,
                               double nu_prime) {
    if (nu_prime == 0.0) throw validation_error("beta_of_sigma: nu' must be nonzero");
    BetaCurve curve;
    curve.sigma = sigma_grid;
    curve.beta.reserve(sigma_grid.size());
    curve.m.reserve(sigma_grid.size());
    curve.period = (u_i_prime == 0.0) ? std::numeric_limits<double>::infinity()
                                      : std::abs(nu_prime / u_i_prime);
    for (double s : sigma_grid) {
        const long m = std::lround(s * u_i_prime / nu_prime);
        curve.m.push_back(m);
        curve.beta.push_back(std::abs(s * u_i_prime - static_cast<double>(m) * nu_prime));
    }
    return curve;
}

}  // namespace loschmidt
