#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "loschmidt/analysis.hpp"
#include "loschmidt/classical.hpp"
#include "loschmidt/quantum.hpp"
#include "oracle_dirichlet.hpp"

using namespace loschmidt;
namespace num = std::numbers;

TEST_CASE("single map steps") {
    SECTION("sin(pi) = 0 leaves the momentum unchanged") {
        const PhasePoint out = step_standard_map({num::pi, 0.3}, 0.5);
        CHECK(out.p == Catch::Approx(0.3).margin(1e-15));
        CHECK(out.r == Catch::Approx(num::pi + 0.3).epsilon(1e-15));
    }
    SECTION("sin(pi/2) = 1 kicks by k") {
        const PhasePoint out = step_standard_map({num::pi / 2, 0.0}, 0.3);
        CHECK(out.p == Catch::Approx(0.3).epsilon(1e-15));
        CHECK(out.r == Catch::Approx(num::pi / 2 + 0.3).epsilon(1e-15));
    }
    SECTION("free rotation unwraps linearly") {
        const Trajectory traj = evolve_trajectory({1.0, 2.5}, 0.0, 200);
        for (std::size_t t = 0; t <= 200; ++t)
            CHECK(traj.r_unwrapped[t] == Catch::Approx(1.0 + 2.5 * t).epsilon(1e-12));
    }
}

TEST_CASE("trajectory construction invariants") {
    const Trajectory traj = evolve_trajectory({0.7, 1.9}, 0.9, 500);
    SECTION("t_max = 0 keeps the input sample") {
        const Trajectory single = evolve_trajectory({0.7, 1.9}, 0.9, 0);
        REQUIRE(single.r.size() == 1);
        CHECK(single.r[0] == 0.7);
        CHECK(single.p[0] == 1.9);
    }
    SECTION("consecutive samples obey the map, bitwise") {
        for (std::size_t t = 0; t + 1 < traj.r.size(); ++t) {
            const PhasePoint next = step_standard_map({traj.r[t], traj.p[t]}, 0.9);
            CHECK(next.r == traj.r[t + 1]);
            CHECK(next.p == traj.p[t + 1]);
        }
    }
    SECTION("unwrapped increments equal the pre-reduction momentum") {
        for (std::size_t t = 0; t + 1 < traj.r.size(); ++t) {
            const double p_star = traj.p[t] + 0.9 * std::sin(traj.r[t]);
            const double inc = traj.r_unwrapped[t + 1] - traj.r_unwrapped[t];
            CHECK(inc == Catch::Approx(p_star).margin(1e-9));
        }
    }
}

TEST_CASE("area preservation and reversibility") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> ur(0.0, two_pi), uk(0.0, 3.0);
    // reversibility needs the regular regime: chaotic orbits amplify
    // roundoff exponentially and cannot be inverted at t = 1e4
    std::uniform_real_distribution<double> uk_reg(0.05, 0.5);
    SECTION("analytic Jacobian determinant is 1") {
        for (int rep = 0; rep < 100; ++rep) {
            const double r = ur(rng), k = uk(rng);
            // d(p',r')/d(p,r) = [[1, k cos r], [1, 1 + k cos r]]
            const double det = 1.0 * (1.0 + k * std::cos(r)) - k * std::cos(r) * 1.0;
            CHECK(std::abs(det - 1.0) <= 1e-14);
        }
    }
    SECTION("forward then inverse returns the start") {
        for (int rep = 0; rep < 5; ++rep) {
            const PhasePoint start{ur(rng), ur(rng)};
            const double k = uk_reg(rng);
            PhasePoint x = start;
            const std::size_t t = 10000;
            for (std::size_t i = 0; i < t; ++i) x = step_standard_map(x, k);
            for (std::size_t i = 0; i < t; ++i) x = step_standard_map_inverse(x, k);
            CHECK(std::abs(x.r - start.r) <= 1e-9);
            CHECK(std::abs(x.p - start.p) <= 1e-9);
        }
    }
}

TEST_CASE("free rotation equidistributes on the circle") {
    // Kolmogorov-Smirnov distance to the uniform law shrinks with time.
    auto ks_uniform = [](const std::vector<double>& r, std::size_t n) {
        std::vector<double> x(r.begin(), r.begin() + n);
        std::sort(x.begin(), x.end());
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = x[i] / two_pi;
            const double e_lo = static_cast<double>(i) / n;
            const double e_hi = static_cast<double>(i + 1) / n;
            worst = std::max({worst, std::abs(f - e_lo), std::abs(f - e_hi)});
        }
        return worst;
    };
    const Trajectory traj = evolve_trajectory({0.3, num::sqrt2}, 0.0, 100000);
    const double ks_short = ks_uniform(traj.r, 1000);
    const double ks_long = ks_uniform(traj.r, 100000);
    CHECK(ks_long < ks_short);
    CHECK(ks_long < 0.01);
}

TEST_CASE("action sums against the free-rotor closed form") {
    // Tolerances are relative to the series maximum.  k_pp combines the
    // production second differences at h, 2h, 4h (two Richardson levels) --
    // a single small-h second difference of cumulative sums sits at the
    // double-precision noise floor of ~1e-7.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ur(0.0, two_pi), up(0.8, 5.4);
    const std::size_t t_max = 1000;
    for (int rep = 0; rep < 5; ++rep) {
        const double r0 = ur(rng), p = up(rng);
        const ActionSeries series = action_difference_series({r0, p}, 0.0, t_max, 100000);
        const std::vector<double> kp = k_p_series(r0, p, 0.0, 2e-7, t_max);
        const double h = 5e-5;
        const std::vector<double> kpp_h = k_pp_series(r0, p, 0.0, h, t_max);
        const std::vector<double> kpp_2h = k_pp_series(r0, p, 0.0, 2 * h, t_max);
        const std::vector<double> kpp_4h = k_pp_series(r0, p, 0.0, 4 * h, t_max);

        double s_scale = 0.0, kp_scale = 0.0, kpp_scale = 0.0;
        std::vector<double> s_ref(t_max + 1), kp_ref(t_max + 1), kpp_ref(t_max + 1);
        for (std::size_t t = 1; t <= t_max; ++t) {
            const double td = static_cast<double>(t);
            s_ref[t] = oracle::action_sum(r0, p, td);
            kp_ref[t] = oracle::action_sum_dp(r0, p, td);
            kpp_ref[t] = oracle::action_sum_dp2(r0, p, td);
            s_scale = std::max(s_scale, std::abs(s_ref[t]));
            kp_scale = std::max(kp_scale, std::abs(kp_ref[t]));
            kpp_scale = std::max(kpp_scale, std::abs(kpp_ref[t]));
        }
        double s_err = 0.0, kp_err = 0.0, kpp_err = 0.0;
        for (std::size_t t = 1; t <= t_max; ++t) {
            s_err = std::max(s_err, std::abs(series.dS_over_eps[t] - s_ref[t]));
            kp_err = std::max(kp_err, std::abs(kp[t] - kp_ref[t]));
            const double rich = (64.0 * kpp_h[t] - 20.0 * kpp_2h[t] + kpp_4h[t]) / 45.0;
            kpp_err = std::max(kpp_err, std::abs(rich - kpp_ref[t]));
        }
        CHECK(s_err <= 1e-8 * s_scale);
        CHECK(kp_err <= 1e-8 * kp_scale);
        CHECK(kpp_err <= 1e-8 * kpp_scale);
    }
}

TEST_CASE("action series bookkeeping") {
    const ActionSeries series = action_difference_series({1.1, 2.3}, 0.3, 50, 20000);
    CHECK(series.dS_over_eps[0] == 0.0);
    const Trajectory traj = evolve_trajectory({1.1, 2.3}, 0.3, 50);
    for (std::size_t t = 1; t <= 50; ++t) {
        // increments equal cos r(t-1), bitwise as accumulated
        const double expected = series.dS_over_eps[t - 1] + std::cos(traj.r[t - 1]);
        CHECK(series.dS_over_eps[t] == expected);
    }
}

TEST_CASE("rotation number and torus averages") {
    SECTION("free rotor frequency is p0") {
        const Trajectory traj = evolve_trajectory({0.4, 2.2}, 0.0, 20000);
        const OrbitEstimates est = rotation_number(traj);
        CHECK(est.nu == Catch::Approx(2.2).epsilon(1e-13));
        CHECK(est.regular);
        CHECK(est.type == TorusType::rotation);
    }
    SECTION("free rotor derivatives: nu' = 1, U_I' = U_I'' = 0") {
        const LocalDerivatives d = local_derivatives(0.4, 2.2, 0.0, 1e-3, 50000);
        CHECK(d.nu_prime == Catch::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(d.u_i_prime) < 1e-6);
        CHECK(std::abs(d.u_i_double_prime) < 1e-3);
        CHECK(d.reliable);
    }
    SECTION("free rotor torus average of cos r vanishes") {
        const Trajectory traj = evolve_trajectory({0.4, num::sqrt2}, 0.0, 100000);
        const OrbitEstimates est = time_average_UI(traj);
        CHECK(std::abs(est.u_i) < 10.0 / 100000.0);
    }
    SECTION("short trajectories are rejected") {
        const Trajectory traj = evolve_trajectory({0.4, 2.2}, 0.0, 100);
        CHECK_THROWS_AS(rotation_number(traj), validation_error);
        CHECK_THROWS_AS(time_average_UI(traj), validation_error);
    }
    SECTION("halving the stencil moves nu' by less than its error bar") {
        const double h = 2e-3;
        const LocalDerivatives d1 = local_derivatives(1.2 * num::pi, 0.8 * num::pi, 0.3, h, 100000);
        const LocalDerivatives d2 =
            local_derivatives(1.2 * num::pi, 0.8 * num::pi, 0.3, h / 2, 100000);
        CHECK(std::abs(d1.nu_prime - d2.nu_prime) <=
              d1.nu_prime_err + d2.nu_prime_err + 1e-12);
    }
}

TEST_CASE("k_p and k_pp behaviour on a regular orbit") {
    const double r0 = 1.2 * num::pi, p0 = 0.8 * num::pi, k = 0.3;
    const LocalDerivatives d = local_derivatives(r0, p0, k, 1.75e-3, 100000);
    REQUIRE(d.reliable);

    SECTION("k_p(0) = 0 and the mean slope approaches U_I'") {
        const std::vector<double> kp = k_p_series(r0, p0, k, 1.75e-3, 3000);
        CHECK(kp[0] == 0.0);
        // least-squares slope of k_p(t) over t: the U_theta oscillation
        // averages out, leaving U_I'
        std::vector<double> x, y;
        for (std::size_t t = 500; t <= 3000; ++t) {
            x.push_back(static_cast<double>(t));
            y.push_back(kp[t]);
        }
        const double slope = detail::least_squares(x, y).slope;
        CHECK(slope == Catch::Approx(d.u_i_prime).margin(0.25 * std::abs(d.u_i_prime)));
    }
    SECTION("k_pp envelope grows as t^2") {
        // the stencil must stay below the S_f oscillation wavelength
        // 2 pi / (nu' t) out to t_max, hence the small step here
        const std::vector<double> kpp = k_pp_series(r0, p0, k, 1e-4, 2000);
        CHECK(kpp[0] == 0.0);
        const double expo = fit_envelope_exponent(kpp, 1000, 2000);
        CHECK(expo == Catch::Approx(2.0).margin(0.2));
    }
}

TEST_CASE("S_f oscillates around zero instead of growing") {
    const std::size_t t_max = 20000;
    const ActionSeries series = action_difference_series({1.2 * num::pi, 0.8 * num::pi}, 0.3,
                                                         t_max, 100000);
    REQUIRE(series.regular);
    const Trajectory traj = evolve_trajectory({1.2 * num::pi, 0.8 * num::pi}, 0.3, 100000);
    const double nu = rotation_number(traj).nu;

    SECTION("windowed means stay within 3 standard deviations") {
        const std::size_t window =
            static_cast<std::size_t>(std::ceil(4.0 * two_pi / nu));
        for (std::size_t start = 0; start + window <= t_max; start += 977) {
            double mean = 0.0;
            for (std::size_t t = start; t < start + window; ++t) mean += series.s_f[t];
            mean /= static_cast<double>(window);
            double var = 0.0;
            for (std::size_t t = start; t < start + window; ++t)
                var += (series.s_f[t] - mean) * (series.s_f[t] - mean);
            const double sd = std::sqrt(var / static_cast<double>(window));
            CHECK(std::abs(mean) <= 3.0 * sd);
        }
    }
    SECTION("dominant discrete-Fourier peak sits at nu / 2 pi") {
        const std::size_t n = 8192;
        std::vector<cplx> buf(n);
        double mean = 0.0;
        for (std::size_t t = 0; t < n; ++t) mean += series.s_f[t];
        mean /= static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) buf[t] = series.s_f[t] - mean;
        Fft fft(static_cast<int>(n));
        fft.forward(buf.data());
        std::size_t peak = 1;
        for (std::size_t b = 1; b <= n / 2; ++b)
            if (std::abs(buf[b]) > std::abs(buf[peak])) peak = b;
        const double f = nu / two_pi;
        const double f_folded = std::min(f - std::floor(f), 1.0 - (f - std::floor(f)));
        const double expected_bin = f_folded * static_cast<double>(n);
        CHECK(std::abs(static_cast<double>(peak) - expected_bin) <= 1.0);
    }
}

TEST_CASE("profile reconstruction") {
    SECTION("free rotor profile is cos(r0 + theta)") {
        const double r0 = 0.9, p0 = num::sqrt2;
        const Trajectory traj = evolve_trajectory({r0, p0}, 0.0, 200000);
        const VProfile prof = reconstruct_V_profile(traj, p0, 64);
        double worst = 0.0, lo = 1e9, hi = -1e9;
        for (int i = 0; i < 64; ++i) {
            const double theta = (i + 0.5) * two_pi / 64;
            worst = std::max(worst, std::abs(prof.value[i] - std::cos(r0 + theta)));
            lo = std::min(lo, prof.value[i]);
            hi = std::max(hi, prof.value[i]);
        }
        CHECK(worst < 2e-3);  // binning error ~ (bin width)^2 / 8
        CHECK(hi - lo == Catch::Approx(2.0).margin(0.01));
    }
    SECTION("profile mean equals the time average") {
        const Trajectory traj = evolve_trajectory({1.2 * num::pi, 0.6 * num::pi}, 0.3, 100000);
        const OrbitEstimates est = orbit_estimates(traj);
        REQUIRE(est.regular);
        const VProfile prof = reconstruct_V_profile(traj, est.nu, 64);
        CHECK(prof.mean == Catch::Approx(est.u_i).margin(1e-3));
    }
    SECTION("doubling the trajectory length changes the profile below binning noise") {
        const Trajectory t1 = evolve_trajectory({1.2 * num::pi, 0.6 * num::pi}, 0.3, 100000);
        const Trajectory t2 = evolve_trajectory({1.2 * num::pi, 0.6 * num::pi}, 0.3, 200000);
        const double nu = rotation_number(t2).nu;
        const VProfile p1 = reconstruct_V_profile(t1, nu, 64);
        const VProfile p2 = reconstruct_V_profile(t2, nu, 64);
        double worst = 0.0;
        for (int i = 0; i < 64; ++i) worst = std::max(worst, std::abs(p1.value[i] - p2.value[i]));
        CHECK(worst < 2e-3);
    }
    SECTION("resonant fold is rejected") {
        const Trajectory traj = evolve_trajectory({0.9, num::pi}, 0.0, 20000);
        CHECK_THROWS_AS(reconstruct_V_profile(traj, num::pi, 64), resonance_error);
    }
}

TEST_CASE("action difference vs p0 contrasts island and central regions") {
    // at t = 20 the slope of dS/eps in p0 is much steeper in the island
    // region than in the central oscillating region, which is what makes
    // packets at 0.2 pi decay faster than at 0.6 pi
    const double r0 = 1.2 * num::pi;
    auto slope_scale = [&](double lo_pi, double hi_pi) {
        double worst = 0.0;
        const int n = 40;
        for (int i = 0; i + 1 < n; ++i) {
            const double pa = (lo_pi + (hi_pi - lo_pi) * i / (n - 1)) * num::pi;
            const double pb = (lo_pi + (hi_pi - lo_pi) * (i + 1) / (n - 1)) * num::pi;
            const double sa = detail::action_sum_stream(r0, pa, 0.3, 20)[20];
            const double sb = detail::action_sum_stream(r0, pb, 0.3, 20)[20];
            worst = std::max(worst, std::abs(sb - sa) / (pb - pa));
        }
        return worst;
    };
    const double border = slope_scale(0.15, 0.30);
    const double central = slope_scale(0.55, 0.70);
    INFO("border slope " << border << " central slope " << central);
    CHECK(border > 2.0 * central);
}

TEST_CASE("island orbits report the libration frequency") {
    // inside the main island the lifted slope locks to pi; the reported
    // frequency is the (doubled) centroid phase advance
    const Trajectory traj = evolve_trajectory({1.2 * num::pi, 0.28 * num::pi}, 0.3, 100000);
    const OrbitEstimates est = orbit_estimates(traj);
    CHECK(est.type == TorusType::libration);
    CHECK(est.regular);
    CHECK(est.nu > 0.0);
    CHECK(est.nu < num::pi);
    // V recurs at est.nu: folding at that frequency must fill all bins
    CHECK_NOTHROW(reconstruct_V_profile(traj, est.nu, 64));
}
