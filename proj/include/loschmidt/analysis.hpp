// Regime detection and quantitative comparison of fidelity series:
// empirical tau1 crossing, power-law exponent fits, predictor-vs-quantum
// error metrics.  Series are indexed by kick count, value[t] = M(t).
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "loschmidt/common.hpp"
#include "loschmidt/semiclassical.hpp"

namespace loschmidt {

struct PowerLawFit {
    double alpha = 0.0;      // M ~ t^(-alpha)
    double t_lo = 0.0;
    double t_hi = 0.0;
    double r_squared = 0.0;
    double stderr_alpha = 0.0;
    bool trusted = false;    // window spans at least one decade
};

namespace detail {

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double stderr_slope = 0.0;
    std::size_t n = 0;
};

inline LinFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    LinFit fit;
    fit.n = x.size();
    if (fit.n < 3) throw analysis_error("least_squares: need at least 3 points");
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < fit.n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / fit.n, my = sy / fit.n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < fit.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw analysis_error("least_squares: degenerate abscissa");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < fit.n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr += r * r;
    }
    fit.r_squared = (syy == 0.0) ? 1.0 : 1.0 - ssr / syy;
    fit.stderr_slope =
        (fit.n > 2) ? std::sqrt(ssr / static_cast<double>(fit.n - 2) / sxx) : 0.0;
    return fit;
}

// Centered moving average; window is clipped at the series ends.
inline std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
    if (window < 2) return v;
    std::vector<double> out(v.size());
    const std::size_t half = window / 2;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t lo = i > half ? i - half : 0;
        const std::size_t hi = std::min(v.size() - 1, i + half);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += v[j];
        out[i] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

}  // namespace detail

// Least-squares power-law fit of ln M against ln t on [t_lo, t_hi], after a
// centered moving average suppresses the S_f oscillation.  alpha is the
// negated slope; the fit is flagged untrusted when the window spans less
// than a decade in t.
inline PowerLawFit fit_power_law(const std::vector<double>& m, std::size_t t_lo,
                                 std::size_t t_hi, std::size_t smoothing_window = 5) {
    if (t_lo < 1 || t_lo >= t_hi || t_hi >= m.size())
        throw analysis_error("fit_power_law: bad window [" + std::to_string(t_lo) + ", " +
                             std::to_string(t_hi) + "]");
    const std::vector<double> smooth = detail::moving_average(m, smoothing_window);
    std::vector<double> x, y;
    x.reserve(t_hi - t_lo + 1);
    y.reserve(t_hi - t_lo + 1);
    for (std::size_t t = t_lo; t <= t_hi; ++t) {
        if (!(smooth[t] > 0.0))
            throw analysis_error("fit_power_law: nonpositive value at t = " + std::to_string(t));
        x.push_back(std::log(static_cast<double>(t)));
        y.push_back(std::log(smooth[t]));
    }
    if (x.size() < 8) throw analysis_error("fit_power_law: window too short");
    const detail::LinFit lin = detail::least_squares(x, y);
    PowerLawFit fit;
    fit.alpha = -lin.slope;
    fit.t_lo = static_cast<double>(t_lo);
    fit.t_hi = static_cast<double>(t_hi);
    fit.r_squared = lin.r_squared;
    fit.stderr_alpha = lin.stderr_slope;
    fit.trusted = static_cast<double>(t_hi) / static_cast<double>(t_lo) >= 10.0;
    return fit;
}

// First t where |[M(t) - M_sc1(t)] / M(t)| exceeds the threshold.  When the
// series never cross, the result carries the scan end as a lower bound.
struct Tau1Crossing {
    double t = 0.0;
    bool crossed = false;
    bool truncated = false;  // scan stopped because M reached zero
};

inline Tau1Crossing empirical_tau1(const std::vector<double>& quantum,
                                   const std::vector<double>& predicted,
                                   double threshold = 0.1) {
    if (quantum.size() != predicted.size())
        throw analysis_error("empirical_tau1: series must share the t grid");
    Tau1Crossing result;
    for (std::size_t t = 0; t < quantum.size(); ++t) {
        if (!(quantum[t] > 0.0)) {
            result.t = static_cast<double>(t);
            result.truncated = true;
            return result;
        }
        if (std::abs(quantum[t] - predicted[t]) / quantum[t] > threshold) {
            result.t = static_cast<double>(t);
            result.crossed = true;
            return result;
        }
    }
    result.t = static_cast<double>(quantum.size() - 1);
    return result;
}

// Decay-regime segmentation.  Bands are positioned from the M_sc2
// crossover time t_c and the plateau end: the Gaussian candidate runs to
// min(t_c/2, t_plateau), the transition band brackets [t_c/2, t_c), and
// the long-time band starts at 2 t_c where the 1/t factor dominates.
// (tau1 itself bounds the validity of the linear law M_sc1, which at weak
// perturbation ends long before the visible Gaussian decay does, so it is
// reported in TimeScales but not used as a band edge.)  Each band carries
// all three local fits; its label is the model with the best adjusted
// r^2, or indeterminate on a tie.
enum class RegimeLabel { gaussian, exponential, power_law, indeterminate };

struct RegimeBand {
    std::size_t t_lo = 0;
    std::size_t t_hi = 0;  // inclusive
    RegimeLabel label = RegimeLabel::indeterminate;
    RegimeLabel expected = RegimeLabel::indeterminate;
    double adj_r2_gauss = 0.0;
    double adj_r2_exp = 0.0;
    double adj_r2_power = 0.0;
};

struct RegimeSegmentation {
    std::vector<RegimeBand> bands;
};

namespace detail {

// Adjusted r^2 of the three decay models on [lo, hi]; the Gaussian model
// -ln M = a t^2 is a one-parameter fit through the origin.
inline void band_fits(const std::vector<double>& m, std::size_t lo, std::size_t hi,
                      RegimeBand& band) {
    std::vector<double> t2, lnt, minus_lnm, lnm;
    for (std::size_t t = std::max<std::size_t>(lo, 1); t <= hi; ++t) {
        if (!(m[t] > 0.0)) continue;
        t2.push_back(static_cast<double>(t) * static_cast<double>(t));
        lnt.push_back(std::log(static_cast<double>(t)));
        minus_lnm.push_back(-std::log(m[t]));
        lnm.push_back(std::log(m[t]));
    }
    const std::size_t n = t2.size();
    if (n < 4) return;

    auto adjusted = [n](double r2, std::size_t n_par) {
        return 1.0 - (1.0 - r2) * (static_cast<double>(n) - 1.0) /
                         (static_cast<double>(n) - static_cast<double>(n_par) - 1.0);
    };

    // -ln M = a t^2, through the origin
    double sxy = 0.0, sxx = 0.0, syy = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += t2[i] * minus_lnm[i];
        sxx += t2[i] * t2[i];
        sy += minus_lnm[i];
        syy += minus_lnm[i] * minus_lnm[i];
    }
    const double a = sxy / sxx;
    double ssr = 0.0;
    const double mean_y = sy / n;
    double sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = minus_lnm[i] - a * t2[i];
        ssr += r * r;
        sst += (minus_lnm[i] - mean_y) * (minus_lnm[i] - mean_y);
    }
    band.adj_r2_gauss = sst > 0.0 ? adjusted(1.0 - ssr / sst, 1) : 0.0;

    // ln M linear in t (exponential) and in ln t (power law)
    std::vector<double> tt(n);
    for (std::size_t i = 0; i < n; ++i) tt[i] = std::sqrt(t2[i]);
    band.adj_r2_exp = adjusted(least_squares(tt, lnm).r_squared, 2);
    band.adj_r2_power = adjusted(least_squares(lnt, lnm).r_squared, 2);

    const double g = band.adj_r2_gauss, e = band.adj_r2_exp, p = band.adj_r2_power;
    const double best = std::max({g, e, p});
    constexpr double margin = 1e-3;
    const bool tie = (best - g < margin) + (best - e < margin) + (best - p < margin) > 1;
    if (tie)
        band.label = RegimeLabel::indeterminate;
    else if (best == g)
        band.label = RegimeLabel::gaussian;
    else if (best == e)
        band.label = RegimeLabel::exponential;
    else
        band.label = RegimeLabel::power_law;
}

}  // namespace detail

inline RegimeSegmentation classify_regimes(const std::vector<double>& m,
                                           const TimeScales& scales,
                                           std::size_t smoothing_window = 1) {
    const std::vector<double> smooth = detail::moving_average(m, smoothing_window);
    const std::size_t t_end = m.size() - 1;
    auto clamp_t = [t_end](double t) {
        return static_cast<std::size_t>(std::min(std::max(t, 0.0), static_cast<double>(t_end)));
    };
    RegimeSegmentation seg;
    const double tc = scales.t_crossover;

    RegimeBand gauss;
    gauss.t_lo = 0;
    gauss.t_hi = clamp_t(std::min(std::isfinite(tc) ? 0.5 * tc : static_cast<double>(t_end),
                                  std::isfinite(scales.t_plateau) ? scales.t_plateau
                                                                  : static_cast<double>(t_end)));
    gauss.expected = RegimeLabel::gaussian;

    RegimeBand trans;
    trans.t_lo = clamp_t(std::isfinite(tc) ? 0.5 * tc : static_cast<double>(t_end));
    trans.t_hi = clamp_t(std::isfinite(tc) ? tc : static_cast<double>(t_end));
    trans.expected = RegimeLabel::exponential;

    RegimeBand power;
    power.t_lo = clamp_t(std::isfinite(tc) ? 2.0 * tc : static_cast<double>(t_end));
    power.t_hi = t_end;
    power.expected = RegimeLabel::power_law;

    for (RegimeBand* band : {&gauss, &trans, &power}) {
        if (band->t_hi > band->t_lo) detail::band_fits(smooth, band->t_lo, band->t_hi, *band);
        seg.bands.push_back(*band);
    }
    return seg;
}

// Elementwise comparison of two series on a common t grid.
struct ComparisonReport {
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    double first_crossing = -1.0;  // first t where the deviation exceeds the threshold
    std::size_t n_compared = 0;
};

inline ComparisonReport compare_series(const std::vector<double>& a,
                                       const std::vector<double>& b, double threshold,
                                       double floor = 1e-6) {
    if (a.size() != b.size())
        throw analysis_error("compare_series: series must share the t grid");
    ComparisonReport rep;
    double sum = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (!(a[t] > floor) || !(b[t] > floor)) continue;
        const double rel = std::abs(a[t] - b[t]) / a[t];
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        sum += rel;
        ++rep.n_compared;
        if (rep.first_crossing < 0.0 && rel > threshold)
            rep.first_crossing = static_cast<double>(t);
    }
    if (rep.n_compared > 0) rep.mean_rel_err = sum / static_cast<double>(rep.n_compared);
    return rep;
}

// Log-log slope of the running maximum of |v| on [t_lo, t_hi]; exposes the
// growth exponent of oscillating envelopes such as k_pp(t) ~ t^2.
inline double fit_envelope_exponent(const std::vector<double>& v, std::size_t t_lo,
                                    std::size_t t_hi) {
    if (t_lo < 1 || t_lo >= t_hi || t_hi >= v.size())
        throw analysis_error("fit_envelope_exponent: bad window");
    std::vector<double> x, y;
    double peak = 0.0;
    for (std::size_t t = 1; t <= t_hi; ++t) {
        peak = std::max(peak, std::abs(v[t]));
        if (t >= t_lo && peak > 0.0) {
            x.push_back(std::log(static_cast<double>(t)));
            y.push_back(std::log(peak));
        }
    }
    return detail::least_squares(x, y).slope;
}

}  // namespace loschmidt
