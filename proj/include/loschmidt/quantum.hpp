// Quantum engine: exact Floquet evolution of the kicked rotator on the
// N-torus and the fidelity M(t) = |<psi_pert(t)|psi_unpert(t)>|^2.
//
// One kick period applies the position-diagonal kick factor
// exp(-i k0_eff cos r) followed by the momentum-diagonal kinetic factor
// exp(-i T m^2 / 2), switching bases with unitary (1/sqrt(N)-scaled)
// discrete Fourier transforms.  Momentum index m runs 0..N-1 so the
// kinetic phase is pi m^2 / N, reduced exactly with integer arithmetic.
#pragma once

#include <fftw3.h>

#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "loschmidt/common.hpp"
#include "loschmidt/model.hpp"

namespace loschmidt {

using cplx = std::complex<double>;

// Unitary in-place FFT pair for one transform size.  FFTW planning is not
// thread-safe, so plan creation and destruction are serialized; execution
// through the new-array interface is safe from any thread.
class Fft {
  public:
    explicit Fft(int n) : n_(n), scale_(1.0 / std::sqrt(static_cast<double>(n))) {
        std::vector<cplx> buf(static_cast<std::size_t>(n));
        auto* ptr = reinterpret_cast<fftw_complex*>(buf.data());
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_1d(n, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft_1d(n, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const { return n_; }

    // position -> momentum
    void forward(cplx* data) const {
        auto* ptr = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_, ptr, ptr);
        rescale(data);
    }
    // momentum -> position
    void backward(cplx* data) const {
        auto* ptr = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(bwd_, ptr, ptr);
        rescale(data);
    }

  private:
    void rescale(cplx* data) const {
        for (int i = 0; i < n_; ++i) data[i] *= scale_;
    }
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }
    int n_;
    double scale_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

// N complex amplitudes on the position grid r_j = 2*pi*j/N.
struct StateVector {
    std::vector<cplx> amp;

    std::size_t size() const { return amp.size(); }
    double norm_sq() const {
        double s = 0.0;
        for (const cplx& a : amp) s += std::norm(a);
        return s;
    }
    void normalize() {
        const double inv = 1.0 / std::sqrt(norm_sq());
        for (cplx& a : amp) a *= inv;
    }
};

inline cplx inner_product(const StateVector& bra, const StateVector& ket) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < bra.amp.size(); ++j) s += std::conj(bra.amp[j]) * ket.amp[j];
    return s;
}

// One-period evolution operator with a fixed kick amplitude.  The
// perturbed system of a fidelity run uses k0 + sigma, since the classical
// perturbation k -> k + epsilon rescales to sigma = epsilon/hbar_eff.
class FloquetOperator {
  public:
    FloquetOperator(const RotorParams& params, double k0_effective,
                    std::shared_ptr<Fft> fft = nullptr)
        : n_(params.n_dim), fft_(fft ? std::move(fft) : std::make_shared<Fft>(params.n_dim)) {
        if (!std::isfinite(k0_effective))
            throw validation_error("floquet_step: kick amplitude must be finite");
        kick_.resize(n_);
        kinetic_.resize(n_);
        for (int j = 0; j < n_; ++j) {
            const double r_j = two_pi * j / n_;
            kick_[j] = std::polar(1.0, -k0_effective * std::cos(r_j));
        }
        // exp(-i pi m^2 / N) has period 2N in m; reduce m^2 exactly first.
        for (std::int64_t m = 0; m < n_; ++m) {
            const std::int64_t m2 = (m * m) % (2 * n_);
            kinetic_[m] = std::polar(1.0, -std::numbers::pi_v<double> * static_cast<double>(m2) / n_);
        }
    }

    void step(StateVector& psi) const {
        cplx* a = psi.amp.data();
        for (int j = 0; j < n_; ++j) a[j] *= kick_[j];
        fft_->forward(a);
        for (int m = 0; m < n_; ++m) a[m] *= kinetic_[m];
        fft_->backward(a);
    }

    int dim() const { return n_; }
    const std::shared_ptr<Fft>& fft() const { return fft_; }

  private:
    int n_;
    std::shared_ptr<Fft> fft_;
    std::vector<cplx> kick_;
    std::vector<cplx> kinetic_;
};

// Convenience single-step form.
inline StateVector floquet_step(const StateVector& state, const RotorParams& params,
                                double k0_effective) {
    StateVector out = state;
    FloquetOperator op(params, k0_effective);
    op.step(out);
    return out;
}

// Periodized Gaussian packet: sum over images r_j + 2*pi*n, plane-wave
// factor at the nearest integer momentum m0 = round(p0 N / 2*pi) so the
// wavefunction is exactly 2*pi-periodic.  Images with Gaussian factor
// below 1e-18 are dropped; the state is normalized afterwards.
inline StateVector prepare_gaussian(const PacketSpec& packet, const RotorParams& params) {
    const int n = params.n_dim;
    const std::int64_t m0 = std::llround(packet.p0 * n / two_pi);
    const double cutoff = packet.xi * std::sqrt(2.0 * std::log(1e18));

    StateVector psi;
    psi.amp.resize(n);
    for (int j = 0; j < n; ++j) {
        const double r_j = two_pi * j / n;
        const std::int64_t n_lo =
            static_cast<std::int64_t>(std::floor((packet.r0 - cutoff - r_j) / two_pi));
        const std::int64_t n_hi =
            static_cast<std::int64_t>(std::ceil((packet.r0 + cutoff - r_j) / two_pi));
        double env = 0.0;
        for (std::int64_t img = n_lo; img <= n_hi; ++img) {
            const double x = r_j + two_pi * img - packet.r0;
            env += std::exp(-x * x / (2.0 * packet.xi * packet.xi));
        }
        // e^{i m0 r_j} with the angle reduced exactly: m0 r_j = 2*pi*(m0 j)/N.
        const std::int64_t phase_idx = ((m0 % n) * j) % n;
        psi.amp[j] = env * std::polar(1.0, two_pi * static_cast<double>(phase_idx) / n);
    }
    psi.normalize();
    return psi;
}

// Fidelity amplitude m(t) and M(t) = |m(t)|^2 for t = 0..t_max.
struct FidelitySeries {
    std::vector<cplx> m_amp;
    std::vector<double> m_sq;

    std::size_t t_max() const { return m_sq.size() - 1; }
};

inline FidelitySeries fidelity_series(const PacketSpec& packet, const RotorParams& params,
                                      std::size_t t_max) {
    StateVector unpert = prepare_gaussian(packet, params);
    StateVector pert = unpert;
    auto fft = std::make_shared<Fft>(params.n_dim);
    const FloquetOperator u0(params, params.k0, fft);
    const FloquetOperator u1(params, params.k0 + params.sigma, fft);

    FidelitySeries series;
    series.m_amp.resize(t_max + 1);
    series.m_sq.resize(t_max + 1);
    for (std::size_t t = 0; t <= t_max; ++t) {
        const cplx m = inner_product(pert, unpert);
        series.m_amp[t] = m;
        series.m_sq[t] = std::norm(m);
        if (t < t_max) {
            u0.step(unpert);
            u1.step(pert);
        }
    }
    return series;
}

// Dense position-basis Floquet matrix, for cross-checking the split-operator
// path on small N.  The kinetic factor reduces to a convolution kernel that
// depends only on (j - l) mod N.
class DenseFloquet {
  public:
    DenseFloquet(const RotorParams& params, double k0_effective) : n_(params.n_dim) {
        if (n_ > 256)
            throw validation_error(
                "dense_floquet_oracle: N > 256; use floquet_step for large systems");
        std::vector<cplx> kernel(n_);
        for (std::int64_t m = 0; m < n_; ++m) {
            const std::int64_t m2 = (m * m) % (2 * n_);
            kernel[m] = std::polar(1.0, -std::numbers::pi_v<double> * static_cast<double>(m2) / n_);
        }
        Fft fft(n_);
        fft.backward(kernel.data());  // kernel[d] * sqrt(N) = sum_m kin_m e^{2 pi i m d / N} / N
        const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
        u_.resize(static_cast<std::size_t>(n_) * n_);
        for (int j = 0; j < n_; ++j) {
            for (int l = 0; l < n_; ++l) {
                const double r_l = two_pi * l / n_;
                const cplx kick = std::polar(1.0, -k0_effective * std::cos(r_l));
                u_[static_cast<std::size_t>(j) * n_ + l] =
                    kernel[(j - l + n_) % n_] * inv_sqrt_n * kick;
            }
        }
    }

    int dim() const { return n_; }
    cplx at(int j, int l) const { return u_[static_cast<std::size_t>(j) * n_ + l]; }

    StateVector apply(const StateVector& in) const {
        StateVector out;
        out.amp.assign(n_, cplx{0.0, 0.0});
        for (int j = 0; j < n_; ++j) {
            cplx s = 0.0;
            const cplx* row = &u_[static_cast<std::size_t>(j) * n_];
            for (int l = 0; l < n_; ++l) s += row[l] * in.amp[l];
            out.amp[j] = s;
        }
        return out;
    }

  private:
    int n_;
    std::vector<cplx> u_;
};

inline DenseFloquet dense_floquet_oracle(const RotorParams& params, double k0_effective) {
    return DenseFloquet(params, k0_effective);
}

}  // namespace loschmidt
