// Test-only closed forms for the free rotor (k = 0).  The action sum is a
// geometric series,
//   sum_{t'=0}^{t-1} cos(r0 + p t') = Re[ e^{i r0} g(p, t) ],
//   g(p, t) = (e^{i p t} - 1) / (e^{i p} - 1),
// and its p-derivatives follow from the quotient rule.  These stay fully
// independent of the map/iteration code they are used to check.
#pragma once

#include <complex>

namespace oracle {

using cplx = std::complex<double>;

inline cplx g(double p, double t) {
    const cplx num = std::polar(1.0, p * t) - 1.0;
    const cplx den = std::polar(1.0, p) - 1.0;
    return num / den;
}

inline cplx dg_dp(double p, double t) {
    const cplx eipt = std::polar(1.0, p * t);
    const cplx eip = std::polar(1.0, p);
    const cplx a = eipt - 1.0, b = eip - 1.0;
    const cplx da = cplx(0.0, t) * eipt, db = cplx(0.0, 1.0) * eip;
    return (da * b - a * db) / (b * b);
}

inline cplx d2g_dp2(double p, double t) {
    const cplx eipt = std::polar(1.0, p * t);
    const cplx eip = std::polar(1.0, p);
    const cplx a = eipt - 1.0, b = eip - 1.0;
    const cplx da = cplx(0.0, t) * eipt, db = cplx(0.0, 1.0) * eip;
    const cplx dda = -t * t * eipt, ddb = -eip;
    return (dda * b * b - a * ddb * b - 2.0 * da * db * b + 2.0 * a * db * db) / (b * b * b);
}

inline double action_sum(double r0, double p, double t) {
    return (std::polar(1.0, r0) * g(p, t)).real();
}
inline double action_sum_dp(double r0, double p, double t) {
    return (std::polar(1.0, r0) * dg_dp(p, t)).real();
}
inline double action_sum_dp2(double r0, double p, double t) {
    return (std::polar(1.0, r0) * d2g_dp2(p, t)).real();
}

}  // namespace oracle
