// Classical engine: standard-map orbits, first-order action differences and
// the action-angle estimators (nu, U_I and their p0-derivatives) feeding the
// semiclassical fidelity predictors.
//
// Map ordering is kick first, then free rotation, matching the Floquet
// operator factor order:
//
//   p' = p + k sin(r)   (mod 2*pi)
//   r' = r + p'         (mod 2*pi)
//
// The lifted angle is unwrapped with the pre-reduction momentum p', so for
// k = 0 the rotation number equals p0 exactly.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "loschmidt/common.hpp"
#include "loschmidt/model.hpp"

namespace loschmidt {

namespace detail {

// Streaming map state; winding counts full turns of the lifted angle.
struct MapState {
    double r = 0.0;
    double p = 0.0;
    std::int64_t winding = 0;
};

inline void advance(MapState& s, double k) {
    const double p_star = s.p + k * std::sin(s.r);  // pre-reduction momentum
    double p_new = p_star;
    while (p_new >= two_pi) p_new -= two_pi;
    while (p_new < 0.0) p_new += two_pi;
    double r_new = s.r + p_star;
    while (r_new >= two_pi) {
        r_new -= two_pi;
        ++s.winding;
    }
    while (r_new < 0.0) {
        r_new += two_pi;
        --s.winding;
    }
    s.r = r_new;
    s.p = p_new;
}

// Smooth bump window for weighted orbit averages.  Averages of smooth
// observables along Diophantine tori converge superpolynomially in the
// sample count with this weighting, which is what makes small
// finite-difference stencils in p0 usable on top of them.
inline double birkhoff_weight(double s) {
    return std::exp(-1.0 / (s * (1.0 - s)));
}

template <typename F>
double weighted_orbit_mean(std::size_t n, F&& value_at) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double w = birkhoff_weight((t + 1.0) / (n + 1.0));
        num += w * value_at(t);
        den += w;
    }
    return num / den;
}

}  // namespace detail

inline PhasePoint step_standard_map(const PhasePoint& point, double k) {
    detail::MapState s{point.r, point.p, 0};
    detail::advance(s, k);
    return PhasePoint{s.r, s.p};
}

// Inverse of one kick period: undo the rotation, then the kick.
inline PhasePoint step_standard_map_inverse(const PhasePoint& point, double k) {
    const double r_prev = wrap_near(point.r - point.p);
    const double p_prev = wrap_near(point.p - k * std::sin(r_prev));
    return PhasePoint{r_prev, p_prev};
}

struct Trajectory {
    PhasePoint initial;
    double k = 0.0;
    std::vector<double> r;            // reduced samples r_t
    std::vector<double> p;            // reduced samples p_t
    std::vector<double> r_unwrapped;  // lifted angle, increment p*_{t+1}

    std::size_t t_max() const { return r.size() - 1; }
};

inline Trajectory evolve_trajectory(const PhasePoint& point, double k, std::size_t t_max) {
    Trajectory traj;
    traj.initial = point;
    traj.k = k;
    traj.r.reserve(t_max + 1);
    traj.p.reserve(t_max + 1);
    traj.r_unwrapped.reserve(t_max + 1);
    detail::MapState s{point.r, point.p, 0};
    for (std::size_t t = 0; t <= t_max; ++t) {
        traj.r.push_back(s.r);
        traj.p.push_back(s.p);
        traj.r_unwrapped.push_back(two_pi * static_cast<double>(s.winding) + s.r);
        if (t < t_max) detail::advance(s, k);
    }
    return traj;
}

// Cumulative first-order action difference per unit perturbation,
//   dS/eps(t) = sum_{t'=0}^{t-1} cos r(t'),
// accumulated along the unperturbed orbit, together with the oscillatory
// residual S_f(t) = dS/eps(t) - U_I * t.
struct ActionSeries {
    std::vector<double> dS_over_eps;
    std::vector<double> s_f;
    double u_i = 0.0;
    double u_i_err = 0.0;
    bool regular = false;
};

// Frequency and torus average of cos r along one orbit, with a
// window-doubling convergence estimate.  Orbits on rotational invariant
// circles report the lifted-angle frequency; orbits librating inside the
// main island report the libration frequency around the island center
// (the lifted slope locks to the resonant value there and carries no
// torus information).
enum class TorusType { rotation, libration };

struct OrbitEstimates {
    double nu = 0.0;
    double nu_err = 0.0;
    double u_i = 0.0;
    double u_i_err = 0.0;
    bool regular = false;
    TorusType type = TorusType::rotation;
};

struct EstimatorOptions {
    std::size_t min_steps = 10000;
    double tol = 1e-5;
};

namespace detail {

// Signed representative of an angle in (-pi, pi].
inline double signed_angle(double x) {
    double y = wrap_angle(x);
    if (y > std::numbers::pi_v<double>) y -= two_pi;
    return y;
}

// A librating orbit leaves part of the circle unvisited; a rotational or
// chaotic one fills it.  Returns true when the visited angles form a single
// arc strictly inside the circle.
inline bool is_single_arc(const std::vector<double>& r) {
    constexpr int n_bins = 64;
    bool occ[n_bins] = {};
    for (double x : r) {
        int b = static_cast<int>(x / two_pi * n_bins);
        if (b >= n_bins) b = n_bins - 1;
        occ[b] = true;
    }
    int transitions = 0;
    int filled = 0;
    for (int i = 0; i < n_bins; ++i) {
        filled += occ[i];
        if (occ[i] != occ[(i + 1) % n_bins]) ++transitions;
    }
    return transitions == 2 && filled < n_bins;
}

}  // namespace detail

inline OrbitEstimates rotation_number(const Trajectory& traj,
                                      const EstimatorOptions& opt = {}) {
    const std::size_t n = traj.t_max();
    if (n < opt.min_steps)
        throw validation_error("rotation_number: trajectory shorter than the configured minimum");

    OrbitEstimates est;
    if (detail::is_single_arc(traj.r)) {
        // Libration around the island center: track the centroid phase in
        // the (r, p) plane and average its increments.  The island is
        // symmetric under r -> 2*pi - r and the perturbation cos r is even
        // under it, so V completes two periods per libration loop; the
        // frequency reported here is the one at which V_t = cos r(t)
        // recurs, which is what every predictor formula consumes.
        est.type = TorusType::libration;
        double cr = 0.0, sr = 0.0, cp = 0.0, sp = 0.0;
        for (std::size_t t = 0; t <= n; ++t) {
            cr += std::cos(traj.r[t]);
            sr += std::sin(traj.r[t]);
            cp += std::cos(traj.p[t]);
            sp += std::sin(traj.p[t]);
        }
        const double r_c = std::atan2(sr, cr);
        const double p_c = std::atan2(sp, cp);
        std::vector<double> phase(n + 1);
        for (std::size_t t = 0; t <= n; ++t)
            phase[t] = std::atan2(detail::signed_angle(traj.p[t] - p_c),
                                  detail::signed_angle(traj.r[t] - r_c));
        auto increment = [&](std::size_t t) {
            return detail::signed_angle(phase[t + 1] - phase[t]);
        };
        est.nu = 2.0 * std::abs(detail::weighted_orbit_mean(n, increment));
        const double nu_half = 2.0 * std::abs(detail::weighted_orbit_mean(n / 2, increment));
        est.nu_err = std::abs(est.nu - nu_half);
    } else {
        est.type = TorusType::rotation;
        auto increment = [&](std::size_t t) {
            return traj.r_unwrapped[t + 1] - traj.r_unwrapped[t];
        };
        est.nu = detail::weighted_orbit_mean(n, increment);
        const double nu_half = detail::weighted_orbit_mean(n / 2, increment);
        est.nu_err = std::abs(est.nu - nu_half);
    }
    est.regular = est.nu_err < opt.tol;
    return est;
}

inline OrbitEstimates time_average_UI(const Trajectory& traj,
                                      const EstimatorOptions& opt = {}) {
    const std::size_t n = traj.t_max();
    if (n < opt.min_steps)
        throw validation_error("time_average_UI: trajectory shorter than the configured minimum");
    auto value = [&](std::size_t t) { return std::cos(traj.r[t]); };
    OrbitEstimates est;
    est.u_i = detail::weighted_orbit_mean(n + 1, value);
    const double half = detail::weighted_orbit_mean((n + 1) / 2, value);
    est.u_i_err = std::abs(est.u_i - half);
    est.regular = est.u_i_err < opt.tol;
    return est;
}

// Both estimates from a single orbit; regular means both converged.
inline OrbitEstimates orbit_estimates(const Trajectory& traj,
                                      const EstimatorOptions& opt = {}) {
    OrbitEstimates nu_part = rotation_number(traj, opt);
    OrbitEstimates ui_part = time_average_UI(traj, opt);
    OrbitEstimates est;
    est.nu = nu_part.nu;
    est.nu_err = nu_part.nu_err;
    est.u_i = ui_part.u_i;
    est.u_i_err = ui_part.u_i_err;
    est.regular = nu_part.regular && ui_part.regular;
    est.type = nu_part.type;
    return est;
}

inline ActionSeries action_difference_series(const PhasePoint& point, double k,
                                             std::size_t t_max,
                                             std::size_t estimator_steps = 100000,
                                             const EstimatorOptions& opt = {}) {
    const std::size_t n = std::max(t_max, estimator_steps);
    const Trajectory traj = evolve_trajectory(point, k, n);
    const OrbitEstimates est = orbit_estimates(traj, opt);

    ActionSeries series;
    series.u_i = est.u_i;
    series.u_i_err = est.u_i_err;
    series.regular = est.regular;
    series.dS_over_eps.resize(t_max + 1);
    series.s_f.resize(t_max + 1);
    double sum = 0.0;
    series.dS_over_eps[0] = 0.0;
    series.s_f[0] = 0.0;
    for (std::size_t t = 1; t <= t_max; ++t) {
        sum += std::cos(traj.r[t - 1]);
        series.dS_over_eps[t] = sum;
        series.s_f[t] = sum - est.u_i * static_cast<double>(t);
    }
    return series;
}

// Local p0-derivatives of nu and U_I, from a five-point stencil
// p0, p0 +- h, p0 +- 2h.  Values use the classic central formulas at step h;
// the 2h stencil provides the reported error estimates.
struct LocalDerivatives {
    double nu_prime = 0.0;
    double u_i_prime = 0.0;
    double u_i_double_prime = 0.0;
    double step = 0.0;
    double nu_prime_err = 0.0;
    double u_i_prime_err = 0.0;
    double u_i_double_prime_err = 0.0;
    bool reliable = false;
};

// Derivatives must stay local on the scale of the packet window.
inline double default_fd_step(const PacketSpec& packet) {
    return std::max(packet.w_p / 100.0, 1e-6);
}

inline LocalDerivatives local_derivatives(double r0, double p0, double k, double h_p,
                                          std::size_t t_traj = 100000,
                                          const EstimatorOptions& opt = {}) {
    if (!(h_p > 0.0))
        throw validation_error("local_derivatives: finite-difference step must be > 0");
    OrbitEstimates e[5];
    bool all_regular = true;
    for (int i = 0; i < 5; ++i) {
        const double p_i = p0 + (i - 2) * h_p;
        const Trajectory traj = evolve_trajectory(make_phase_point(r0, p_i), k, t_traj);
        e[i] = orbit_estimates(traj, opt);
        all_regular = all_regular && e[i].regular;
        // A stencil straddling the separatrix mixes incompatible frequencies.
        if (e[i].type != e[0].type) all_regular = false;
    }
    LocalDerivatives d;
    d.step = h_p;
    d.nu_prime = (e[3].nu - e[1].nu) / (2.0 * h_p);
    const double nu_prime_2h = (e[4].nu - e[0].nu) / (4.0 * h_p);
    d.nu_prime_err = std::abs(d.nu_prime - nu_prime_2h) + (e[3].nu_err + e[1].nu_err) / (2.0 * h_p);

    d.u_i_prime = (e[3].u_i - e[1].u_i) / (2.0 * h_p);
    const double ui_prime_2h = (e[4].u_i - e[0].u_i) / (4.0 * h_p);
    d.u_i_prime_err =
        std::abs(d.u_i_prime - ui_prime_2h) + (e[3].u_i_err + e[1].u_i_err) / (2.0 * h_p);

    d.u_i_double_prime = (e[3].u_i - 2.0 * e[2].u_i + e[1].u_i) / (h_p * h_p);
    const double ui_dd_2h = (e[4].u_i - 2.0 * e[2].u_i + e[0].u_i) / (4.0 * h_p * h_p);
    d.u_i_double_prime_err = std::abs(d.u_i_double_prime - ui_dd_2h) +
                             (e[3].u_i_err + 2.0 * e[2].u_i_err + e[1].u_i_err) / (h_p * h_p);
    d.reliable = all_regular;
    return d;
}

namespace detail {

// dS/eps(t) for t = 0..t_max as a flat array, streamed without storing the orbit.
inline std::vector<double> action_sum_stream(double r0, double p0, double k,
                                             std::size_t t_max) {
    std::vector<double> s(t_max + 1);
    MapState st{wrap_angle(r0), wrap_angle(p0), 0};
    double sum = 0.0;
    s[0] = 0.0;
    for (std::size_t t = 1; t <= t_max; ++t) {
        sum += std::cos(st.r);
        advance(st, k);
        s[t] = sum;
    }
    return s;
}

}  // namespace detail

// k_p(t): first p0-derivative of dS/eps at fixed r0, central difference.
inline std::vector<double> k_p_series(double r0, double p0, double k, double h_p,
                                      std::size_t t_max) {
    if (!(h_p > 0.0)) throw validation_error("k_p_series: step must be > 0");
    const std::vector<double> plus = detail::action_sum_stream(r0, p0 + h_p, k, t_max);
    const std::vector<double> minus = detail::action_sum_stream(r0, p0 - h_p, k, t_max);
    std::vector<double> kp(t_max + 1);
    for (std::size_t t = 0; t <= t_max; ++t) kp[t] = (plus[t] - minus[t]) / (2.0 * h_p);
    return kp;
}

// k_pp(t): second p0-derivative of dS/eps, second central difference.
inline std::vector<double> k_pp_series(double r0, double p0, double k, double h_p,
                                       std::size_t t_max) {
    if (!(h_p > 0.0)) throw validation_error("k_pp_series: step must be > 0");
    const std::vector<double> plus = detail::action_sum_stream(r0, p0 + h_p, k, t_max);
    const std::vector<double> center = detail::action_sum_stream(r0, p0, k, t_max);
    const std::vector<double> minus = detail::action_sum_stream(r0, p0 - h_p, k, t_max);
    std::vector<double> kpp(t_max + 1);
    for (std::size_t t = 0; t <= t_max; ++t)
        kpp[t] = (plus[t] - 2.0 * center[t] + minus[t]) / (h_p * h_p);
    return kpp;
}

// Perturbation profile V(theta) = cos r over the torus angle, reconstructed
// by folding the orbit at frequency nu (phase origin theta = 0 at t = 0)
// into n_bins bins and averaging within each bin.
struct VProfile {
    std::vector<double> value;  // bin means, centers at (i + 0.5) * 2*pi/n
    double mean = 0.0;

    double bin_width() const { return two_pi / static_cast<double>(value.size()); }

    // Periodic linear interpolation between bin centers.
    double at(double theta) const {
        const std::size_t n = value.size();
        const double w = bin_width();
        double x = wrap_angle(theta) / w - 0.5;
        if (x < 0.0) x += static_cast<double>(n);
        const std::size_t i = static_cast<std::size_t>(x) % n;
        const double frac = x - std::floor(x);
        return value[i] * (1.0 - frac) + value[(i + 1) % n] * frac;
    }
};

inline VProfile reconstruct_V_profile(const Trajectory& traj, double nu, int n_bins) {
    if (n_bins < 2) throw validation_error("reconstruct_V_profile: need at least 2 bins");
    std::vector<double> sum(n_bins, 0.0);
    std::vector<std::size_t> count(n_bins, 0);
    const std::size_t n = traj.r.size();
    for (std::size_t t = 0; t < n; ++t) {
        const double theta = wrap_angle(nu * static_cast<double>(t));
        int bin = static_cast<int>(theta / two_pi * n_bins);
        if (bin >= n_bins) bin = n_bins - 1;
        sum[bin] += std::cos(traj.r[t]);
        ++count[bin];
    }
    VProfile prof;
    prof.value.resize(n_bins);
    double total = 0.0;
    for (int i = 0; i < n_bins; ++i) {
        if (count[i] == 0)
            throw resonance_error(
                "reconstruct_V_profile: empty angle bin (resonant torus); "
                "increase the trajectory length or reduce n_bins");
        prof.value[i] = sum[i] / static_cast<double>(count[i]);
        total += prof.value[i];
    }
    prof.mean = total / n_bins;
    return prof;
}

}  // namespace loschmidt
