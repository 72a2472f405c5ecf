#pragma once

#include <cmath>
#include <functional>

#include "errors.hpp"

namespace slowmix {

// Exponential mixing-rate family h(s,t) <= D (1 + s^p) e^{-gamma t}.
struct RateParams {
    double D = 1;
    double gamma = 1;
    double p_poly = 0;
};

struct PropQuantities {
    double tau_kappa = 0;
    double A_kappa = 0;
    double B_kappa = 0;
};

// t_dis <= log 2 / (lambda_1 kappa) with lambda_1 = 1 on [0, 2pi]^2.
inline double poincare_bound(double kappa) {
    if (!(kappa > 0)) throw Error("poincare_bound: kappa must be positive");
    return std::log(2.0) / kappa;
}

// C1 in the no-enhancement lower bound t_dis >= C1 / kappa, where
// C0 = ||H||_inf / kappa measures the W^{-1,inf} size of the field.
inline double no_enhancement_constant(double C0) {
    if (!(C0 > 0)) throw Error("no_enhancement_constant: C0 must be positive");
    return std::min(std::log(4.0 / 3.0) / 2.0, 1.0 / (8.0 * C0 * C0));
}

// Single-step quantities for the dissipation-at-mixing-time bound, given the
// decreasing envelope H(T) = sup_{0<=s<=T/3<=t<=T} h(s,t):
//   tau = inf{t in [2,inf): t^{-2} H(t) <= 2^8 (g+1) kappa},
//   A = 1/(2^15 (g+1) tau),  B^{-1} = H(tau) sqrt(3A/(2 kappa tau)).
inline PropQuantities prop_quantities(const std::function<double(double)>& H,
                                      double grad_u_sup, double kappa) {
    const double thresh = 256.0 * (grad_u_sup + 1.0) * kappa;
    auto f = [&](double t) { return H(t) / (t * t); };
    PropQuantities q;
    if (f(2.0) <= thresh) {
        q.tau_kappa = 2.0;
    } else {
        double lo = 2.0, hi = 1e6;
        if (f(hi) > thresh)
            throw NoRoot("prop_quantities: threshold not crossed below 1e6");
        for (int it = 0; it < 200 && (hi - lo) > 1e-9 * hi; ++it) {
            double m = 0.5 * (lo + hi);
            if (f(m) <= thresh) hi = m;
            else lo = m;
        }
        q.tau_kappa = hi;
    }
    q.A_kappa = 1.0 / (32768.0 * (grad_u_sup + 1.0) * q.tau_kappa);
    double binv =
        H(q.tau_kappa) * std::sqrt(3.0 * q.A_kappa / (2.0 * kappa * q.tau_kappa));
    q.B_kappa = 1.0 / binv;
    return q;
}

inline double rate_envelope(const RateParams& r, double T) {
    return r.D * (1.0 + std::pow(T / 3.0, r.p_poly)) * std::exp(-r.gamma * T / 3.0);
}

inline PropQuantities prop_quantities(const RateParams& rate, double grad_u_sup,
                                      double kappa) {
    return prop_quantities([&](double T) { return rate_envelope(rate, T); },
                           grad_u_sup, kappa);
}

// Iterated bound on the dissipation time for an exponentially mixing field:
// 2^24 (g+1) (1 + 2^24 (p/gamma)^4 (g+1) + ((log D)^2 + (log kappa)^2)/gamma^2).
inline double corollary_bound(const RateParams& rate, double grad_u_sup,
                              double kappa) {
    if (!(kappa > 0 && kappa <= 1))
        throw Error("corollary_bound: kappa must lie in (0, 1]");
    const double g1 = grad_u_sup + 1.0;
    const double c = 16777216.0; // 2^24
    double poly = std::pow(rate.p_poly / rate.gamma, 4.0);
    double logs = (std::pow(std::log(rate.D), 2) + std::pow(std::log(kappa), 2)) /
                  (rate.gamma * rate.gamma);
    return c * g1 * (1.0 + c * poly * g1 + logs);
}

// Heuristic dissipation time (1/gamma) |log(C_delta D / kappa^{d/2+delta})|.
inline double heuristic_bound(const RateParams& rate, double C_delta,
                              double delta, int d, double kappa) {
    if (!(delta > 0)) throw Error("heuristic_bound: delta must be positive");
    if (d != 2) throw Error("heuristic_bound: only d = 2 is supported");
    double arg = C_delta * rate.D / std::pow(kappa, d / 2.0 + delta);
    return std::fabs(std::log(arg)) / rate.gamma;
}

} // namespace slowmix
