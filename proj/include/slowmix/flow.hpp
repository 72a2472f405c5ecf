#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "errors.hpp"
#include "profile.hpp"
#include "rng.hpp"
#include "torus.hpp"

namespace slowmix {

// One realization of the alternating random shear field on [0, 2pi]^2.
// Legs have unit duration; even legs shear horizontally (speed depends on x2),
// odd legs vertically. Each leg carries 2N bumps of width 2pi/N whose phases
// are independent uniforms in the sub-intervals [pi i/N, pi (i+1)/N].
// Phases are pure functions of (seed, leg, index): nothing is stored, horizons
// extend lazily and reproducibly.
struct FlowRealization {
    double kappa = 0;
    int n_kappa = 0;
    double amplitude = 0;
    std::shared_ptr<const ShearProfile> profile;
    std::uint64_t seed = 0;
    long horizon = 0;
    // Equivariance probes: constant offsets added to every phase of the given
    // leg parity. Zero in normal use.
    double phase_shift_h = 0;
    double phase_shift_v = 0;

    double phase(long leg, int i) const {
        const double cell = two_pi / 2.0 / n_kappa; // pi/N
        double off = u01(hash3(seed, static_cast<std::uint64_t>(leg),
                               static_cast<std::uint64_t>(i))) * cell;
        double shift = (leg % 2 == 0) ? phase_shift_h : phase_shift_v;
        return i * cell + off + shift;
    }
};

inline FlowRealization realize(double kappa, double amplitude,
                               std::shared_ptr<const ShearProfile> p,
                               std::uint64_t seed, long horizon) {
    if (!(kappa > 0) || kappa > 0.25)
        throw InvalidKappa("kappa must lie in (0, 1/4]");
    double n = std::ceil(1.0 / kappa);
    if (n > 1e8) throw InvalidKappa("ceil(1/kappa) exceeds grid capacity");
    if (horizon < 2) throw InvalidKappa("horizon must be >= 2");
    FlowRealization r;
    r.kappa = kappa;
    r.n_kappa = static_cast<int>(n);
    r.amplitude = amplitude;
    r.profile = std::move(p);
    r.seed = seed;
    r.horizon = horizon;
    return r;
}

// Shear speed psi(c) = A sum_i phi_kappa(c - alpha_i) at transverse
// coordinate c. Supports have width 2pi/N and phases live on a pi/N lattice,
// so only indices floor(cN/pi) - {0,1,2} (mod 2N) can contribute.
inline double shear_speed(const FlowRealization& r, long leg, double coord) {
    const int n2 = 2 * r.n_kappa;
    const double cell = two_pi / 2.0 / r.n_kappa;
    // work relative to the parity shift so the candidate window stays valid
    const double shift = (leg % 2 == 0) ? r.phase_shift_h : r.phase_shift_v;
    const double c = wrap2pi(coord - shift);
    int j = static_cast<int>(std::floor(c / cell));
    if (j >= n2) j = n2 - 1;
    double sum = 0;
    const double support = two_pi / r.n_kappa;
    for (int d = 0; d <= 2; ++d) {
        int i = (j - d + n2) % n2;
        double rel = c - (r.phase(leg, i) - shift);
        if (rel < 0) rel += two_pi;
        if (rel <= support)
            sum += r.profile->eval(r.n_kappa * rel);
    }
    return r.amplitude * sum;
}

inline Point velocity(const FlowRealization& r, double t, const Point& x) {
    long leg = static_cast<long>(std::floor(t));
    if (leg % 2 == 0) return {shear_speed(r, leg, x[1]), 0.0};
    return {0.0, shear_speed(r, leg, x[0])};
}

// Sup-norm bounds from the at-most-3-overlaps structure.
inline double velocity_sup_bound(const FlowRealization& r) {
    return 3.0 * r.amplitude * r.profile->sup_norm;
}
inline double gradient_sup_bound(const FlowRealization& r) {
    return 3.0 * r.amplitude * r.n_kappa * r.profile->d1_sup;
}

// Sup of the stream function of the mean-zero part of the shear,
// H(c) = int_0^c (psi - mean psi), by cumulative trapezoid quadrature.
// The constant drift (mean psi) rigidly rotates the torus and affects no
// norm, so the W^{-1,inf} smallness of the field is carried by H alone.
inline double stream_sup_norm(const FlowRealization& r, long leg,
                              long quadrature_points) {
    if (quadrature_points < (1L << 10) * r.n_kappa)
        throw QuadratureTooCoarse(
            "need at least 2^10 quadrature points per support interval");
    const long q = quadrature_points;
    const double h = two_pi / q;
    std::vector<double> psi(q + 1);
    for (long i = 0; i <= q; ++i) psi[i] = shear_speed(r, leg, i * h);
    double total = 0;
    for (long i = 0; i < q; ++i) total += 0.5 * (psi[i] + psi[i + 1]) * h;
    const double mean = total / two_pi;
    double acc = 0, sup = 0;
    for (long i = 0; i < q; ++i) {
        acc += 0.5 * (psi[i] - mean + psi[i + 1] - mean) * h;
        sup = std::max(sup, std::fabs(acc));
    }
    return sup;
}

// Rescaled family: v_t(x) = eps u_{eps t}(x) with eps = kappa of the base
// realization, so the matching solver diffusivity is kappa_target = eps^2
// and eps = sqrt(kappa_target). Legs of v last 1/eps time units.
struct RescaledFlow {
    FlowRealization base;
    double eps = 0;

    double kappa_target() const { return eps * eps; }
    double leg_duration() const { return 1.0 / eps; }
};

inline RescaledFlow rescale(const FlowRealization& r) {
    return RescaledFlow{r, r.kappa};
}

inline Point velocity(const RescaledFlow& v, double t, const Point& x) {
    Point u = velocity(v.base, v.eps * t, x);
    return {v.eps * u[0], v.eps * u[1]};
}

} // namespace slowmix
