// Minimal tour: prepare a packet, evolve the echo pair, and compare the
// exact fidelity with the Gaussian law and the uniform second-order formula.
#include <cstdio>

#include "loschmidt/analysis.hpp"
#include "loschmidt/classical.hpp"
#include "loschmidt/quantum.hpp"
#include "loschmidt/semiclassical.hpp"

int main() {
    using namespace loschmidt;
    const double pi = std::numbers::pi_v<double>;

    const RotorParams params = make_rotor_params(0.3, 4096, 0.2);
    const PacketSpec packet = make_packet(1.2 * pi, 0.8 * pi, 20.0, params);

    const LocalDerivatives d =
        local_derivatives(packet.r0, packet.p0, params.k, default_fd_step(packet));
    std::printf("orbit: nu' = %.4f, U_I' = %.4f, U_I'' = %.4f (%s)\n", d.nu_prime, d.u_i_prime,
                d.u_i_double_prime, d.reliable ? "regular" : "not converged");

    const std::size_t t_max = 6000;
    const FidelitySeries fs = fidelity_series(packet, params, t_max);
    const std::vector<double> kp =
        k_p_series(packet.r0, packet.p0, params.k, default_fd_step(packet), t_max);
    const std::vector<double> msc1 = m_sc1_series(packet, params, kp);
    const std::vector<double> msc2 = m_sc2_series(packet, params, d, 1.0, t_max);

    std::printf("%8s %12s %12s %12s\n", "t", "M", "M_sc1", "M_sc2");
    for (std::size_t t = 0; t <= t_max; t += 1000)
        std::printf("%8zu %12.5e %12.5e %12.5e\n", t, fs.m_sq[t], msc1[t], msc2[t]);

    const std::vector<double> kpp =
        k_pp_series(packet.r0, packet.p0, params.k, default_fd_step(packet), 2000);
    const TimeScales scales = make_time_scales(packet, params, d, kpp);
    std::printf("time scales: tau1 = %.1f, tau_s = %.1f, plateau end = %.0f, crossover = %.0f\n",
                scales.tau1, scales.tau_s, scales.t_plateau, scales.t_crossover);
    return 0;
}
