// Model constants and unit conventions for the kicked rotator
//
//   H = p^2/2 + k0 cos(r) sum_n delta(t - n T)
//
// on the N-dimensional torus.  Position grid r_j = 2*pi*j/N, momentum grid
// p_m = 2*pi*m/N with m = 0..N-1, so hbar_eff = T = 2*pi/N and p = hbar_eff*m.
// The classical kick strength k = k0*T is N-independent; the perturbation
// k -> k + epsilon corresponds to k0 -> k0 + sigma with sigma = epsilon/hbar_eff.
#pragma once

#include <cmath>

#include "loschmidt/common.hpp"

namespace loschmidt {

struct RotorParams {
    double k = 0.0;       // classical kick strength
    int n_dim = 0;        // Hilbert-space dimension N
    double sigma = 0.0;   // perturbation strength epsilon/hbar_eff
    double hbar_eff = 0.0;
    double T = 0.0;       // kick period, equals hbar_eff
    double k0 = 0.0;      // quantum kick amplitude k*N/(2*pi)
    double epsilon = 0.0; // sigma * hbar_eff
};

inline RotorParams make_rotor_params(double k, int n_dim, double sigma) {
    if (!std::isfinite(k))
        throw validation_error("model.k must be finite");
    if (n_dim < 2)
        throw validation_error("model.n_dim must be an integer >= 2");
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw validation_error("model.sigma must be finite and >= 0");
    RotorParams p;
    p.k = k;
    p.n_dim = n_dim;
    p.sigma = sigma;
    p.hbar_eff = two_pi / n_dim;
    p.T = p.hbar_eff;
    p.k0 = k * n_dim / two_pi;
    p.epsilon = sigma * p.hbar_eff;
    return p;
}

// Initial Gaussian packet centered at (r0, p0) with position width xi.
// The momentum width w_p = hbar_eff/xi sets the effective integration
// window W_p = (p0 - w_p, p0 + w_p) of the semiclassical p0 integral.
struct PacketSpec {
    double r0 = 0.0;
    double p0 = 0.0;
    double xi = 0.0;
    double w_p = 0.0;

    double window_lo() const { return p0 - w_p; }
    double window_hi() const { return p0 + w_p; }
};

// Width convention from the figure setups: xi^2 = hbar_eff / fraction
// (fraction = 20 throughout the reference runs).
inline PacketSpec make_packet(double r0, double p0, double xi_sq_fraction,
                              const RotorParams& params) {
    if (!std::isfinite(r0) || !std::isfinite(p0))
        throw validation_error("packet center must be finite");
    if (!std::isfinite(xi_sq_fraction) || xi_sq_fraction <= 0.0)
        throw validation_error("packet.xi_sq_fraction must be > 0");
    PacketSpec s;
    s.r0 = wrap_angle(r0);
    s.p0 = wrap_angle(p0);
    s.xi = std::sqrt(params.hbar_eff / xi_sq_fraction);
    s.w_p = params.hbar_eff / s.xi;
    return s;
}

// A point of the classical phase space; both coordinates reduced mod 2*pi.
struct PhasePoint {
    double r = 0.0;
    double p = 0.0;
};

inline PhasePoint make_phase_point(double r, double p) {
    if (!std::isfinite(r) || !std::isfinite(p))
        throw validation_error("phase point must be finite");
    return PhasePoint{wrap_angle(r), wrap_angle(p)};
}

}  // namespace loschmidt
