#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "flow.hpp"
#include "spectral.hpp"
#include "torus.hpp"

namespace slowmix {

// Real trigonometric polynomial sum_k c_k e^{i k.x}; the coefficient map
// holds both members of each Hermitian pair.
struct TrigPolynomial {
    std::map<std::pair<int, int>, std::complex<double>> coef;

    void set(int k1, int k2, std::complex<double> c) {
        coef[{k1, k2}] = c;
        coef[{-k1, -k2}] = std::conj(c);
    }

    double eval(const Point& x) const {
        std::complex<double> s = 0;
        for (const auto& [k, c] : coef)
            s += c * std::exp(std::complex<double>(
                     0, k.first * x[0] + k.second * x[1]));
        return s.real();
    }

    int k_max() const {
        int m = 0;
        for (const auto& [k, c] : coef)
            m = std::max({m, std::abs(k.first), std::abs(k.second)});
        return m;
    }

    bool mean_zero() const {
        auto it = coef.find({0, 0});
        return it == coef.end() || std::abs(it->second) < 1e-14;
    }
};

// Mean-zero real trig polynomial with Gaussian coefficients on 0 < |k|_inf
// <= k_max, normalized to L^2 norm 1.
inline TrigPolynomial random_trig(std::uint64_t seed, int k_max) {
    TrigPolynomial p;
    CounterRng rng(hash2(seed, 0x7419011ULL));
    double energy = 0;
    for (int k1 = 0; k1 <= k_max; ++k1)
        for (int k2 = -k_max; k2 <= k_max; ++k2) {
            if (k1 == 0 && k2 <= 0) continue;
            double u1 = std::max(rng.next_u01(), 1e-300), u2 = rng.next_u01();
            double rr = std::sqrt(-2.0 * std::log(u1));
            std::complex<double> z(rr * std::cos(two_pi * u2),
                                   rr * std::sin(two_pi * u2));
            p.set(k1, k2, z);
            energy += 2.0 * std::norm(z);
        }
    double scale = 1.0 / std::sqrt(energy);
    for (auto& [k, c] : p.coef) c *= scale;
    return p;
}

// One unit leg of the transport flow, exact for the piecewise-steady shear:
// horizontal legs displace x1 by fraction * psi(x2), vertical legs
// symmetrically. Inverse legs displace the other way.
inline Point leg_map(const FlowRealization& r, long leg, const Point& x,
                     double fraction, bool inverse = false) {
    double sgn = inverse ? -1.0 : 1.0;
    if (leg % 2 == 0) {
        double d = sgn * fraction * shear_speed(r, leg, x[1]);
        return {wrap2pi(x[0] + d), x[1]};
    }
    double d = sgn * fraction * shear_speed(r, leg, x[0]);
    return {x[0], wrap2pi(x[1] + d)};
}

// Flow map over [t0, t1] (forward) or its inverse: whole-leg compositions
// plus fractional ends, exact up to floating point.
inline Point flow_map_between(const FlowRealization& r, double t0, double t1,
                              Point x, bool inverse = false) {
    if (t1 < t0) throw HorizonExceeded("flow_map: t1 < t0");
    if (t1 > static_cast<double>(r.horizon) + 1e-12)
        throw HorizonExceeded("flow_map: beyond horizon");
    long first = static_cast<long>(std::floor(t0));
    long last = static_cast<long>(std::ceil(t1)) - 1;
    if (last < first) last = first;
    if (!inverse) {
        for (long leg = first; leg <= last; ++leg) {
            double a = std::max(t0, static_cast<double>(leg));
            double b = std::min(t1, static_cast<double>(leg + 1));
            if (b > a) x = leg_map(r, leg, x, b - a, false);
        }
    } else {
        for (long leg = last; leg >= first; --leg) {
            double a = std::max(t0, static_cast<double>(leg));
            double b = std::min(t1, static_cast<double>(leg + 1));
            if (b > a) x = leg_map(r, leg, x, b - a, true);
        }
    }
    return x;
}

inline Point flow_map(const FlowRealization& r, double t, const Point& x,
                      bool inverse = false) {
    return flow_map_between(r, 0.0, t, x, inverse);
}

// Product upper bound for the flow-map Lipschitz constant over n legs.
inline double lipschitz_product_bound(const FlowRealization& r, long n_legs) {
    double factor = 1.0 + 3.0 * r.amplitude * r.n_kappa * r.profile->d1_sup;
    return std::pow(factor, static_cast<double>(n_legs));
}

// Solution of the transport equation at time t started from leg s by exact
// characteristics: phi_t(x) = init(Phi_{s,t}^{-1}(x)) sampled on the grid.
// The only error is aliasing from the final sampling.
inline SpectralField pullback_at_time(const FlowRealization& r, double s,
                                      double t, const TrigPolynomial& init,
                                      int M) {
    std::vector<double> vals(static_cast<std::size_t>(M) * M);
    const double h = two_pi / M;
    for (int i1 = 0; i1 < M; ++i1) {
        for (int i2 = 0; i2 < M; ++i2) {
            Point y = flow_map_between(r, s, t, {i1 * h, i2 * h}, true);
            vals[static_cast<std::size_t>(i1) * M + i2] = init.eval(y);
        }
    }
    auto f = SpectralField::from_samples(M, vals);
    // The flow is measure preserving, so the continuum solution has exactly
    // the datum's mean; pin the sampled (0,0) coefficient to it rather than
    // keep the aliasing residue of the grid average.
    auto it = init.coef.find({0, 0});
    f.coef[0] = (it == init.coef.end()) ? 0.0 : it->second;
    return f;
}

inline SpectralField pullback_solution(const FlowRealization& r, long n,
                                       const TrigPolynomial& init, int M,
                                       long s = 0) {
    return pullback_at_time(r, static_cast<double>(s),
                            static_cast<double>(s + n), init, M);
}

inline constexpr double aliasing_threshold = 1e-4;

inline bool aliased(const SpectralField& f) {
    return top_octave_fraction(f) > aliasing_threshold;
}

} // namespace slowmix
