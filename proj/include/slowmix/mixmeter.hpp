#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "advdiff.hpp"
#include "bounds.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "spectral.hpp"
#include "transport.hpp"

namespace slowmix {

// One sample of the transport mixing curve: the scalar advected (kappa = 0)
// from leg s over n legs, measured as ||phi_{s+n}||_{H^-1} / ||phi_s||_{H^1}.
struct MixRecord {
    long s = 0;
    long n = 0;
    double hminus1 = 0;
    double h1_init = 0;
    double ratio = 0;
    bool aliased = false;
};

struct RateFit {
    double gamma_hat = 0;
    double prefactor_hat = 0;
    long n_min = 0;
    long n_max = 0;
    double residual = 0;
};

struct TdisResult {
    double s = 0;
    double kappa = 0;
    double t_dis_hat = 0;
    double op_norm_at_t = 0;
    int power_iters = 0;
    double bisection_tol = 0;
};

inline std::vector<MixRecord> mix_records(const FlowRealization& r,
                                          const TrigPolynomial& init, long s,
                                          long n_max, int M) {
    if (s + n_max > r.horizon)
        throw HorizonExceeded("mix_records: s + n_max beyond horizon");
    std::vector<MixRecord> out;
    double h1_init = 0;
    for (long n = 0; n <= n_max; n += 2) {
        SpectralField f = pullback_solution(r, n, init, M, s);
        if (n == 0) h1_init = sobolev_norm(f, 1.0);
        MixRecord rec;
        rec.s = s;
        rec.n = n;
        rec.hminus1 = sobolev_norm(f, -1.0);
        rec.h1_init = h1_init;
        rec.ratio = h1_init > 0 ? rec.hminus1 / h1_init : 0;
        rec.aliased = aliased(f);
        out.push_back(rec);
    }
    return out;
}

// Least-squares log-linear fit of ratio vs n over [n_min, n_max], using only
// non-aliased records with positive ratio. Legs are unit time, so gamma_hat
// is a rate per unit time.
inline RateFit fit_rate(const std::vector<MixRecord>& records, long n_min = 0,
                        long n_max = -1) {
    std::vector<double> xs, ys;
    long lo = n_min, hi = n_max < 0 ? (1L << 60) : n_max;
    for (const auto& rec : records) {
        if (rec.aliased || rec.ratio <= 0) continue;
        if (rec.n < lo || rec.n > hi) continue;
        xs.push_back(static_cast<double>(rec.n));
        ys.push_back(std::log(rec.ratio));
    }
    if (xs.size() < 4)
        throw InsufficientData("fit_rate: fewer than 4 usable records");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - (intercept + slope * xs[i]);
        rss += e * e;
    }
    RateFit fit;
    fit.gamma_hat = -slope;
    fit.prefactor_hat = std::exp(intercept);
    fit.n_min = static_cast<long>(xs.front());
    fit.n_max = static_cast<long>(xs.back());
    fit.residual = std::sqrt(rss / n);
    return fit;
}

namespace detail {

// Power iteration for ||T|| on the mean-zero subspace, iterating T* T.
// The k = 0 component must be projected out after every application: its
// multiplier is 1, so once the operator damps everything to rounding level
// the constant mode would otherwise swallow the iteration and report 1.
struct OpNormResult {
    double value = 0;
    int iters = 0;
};

inline OpNormResult op_norm(const std::function<void(SpectralField&)>& fwd,
                            const std::function<void(SpectralField&)>& adj,
                            int M, std::uint64_t seed, SpectralField* warm,
                            int max_iters = 20, double rtol = 1e-4) {
    SpectralField v = (warm && warm->M == M) ? *warm
                                             : random_bandlimited(seed, 8, M);
    v.coef[0] = 0;
    {
        double nv = l2_norm(v);
        if (nv < 1e-200) v = random_bandlimited(seed, 8, M);
        else for (auto& c : v.coef) c /= nv;
    }
    OpNormResult res;
    double prev = -1;
    for (int it = 0; it < max_iters; ++it) {
        SpectralField w = v;
        fwd(w);
        w.coef[0] = 0;
        adj(w);
        w.coef[0] = 0;
        double rayleigh = inner(w, v); // ||T v||^2 since ||v|| = 1
        double cur = std::sqrt(std::max(rayleigh, 0.0));
        res.iters = it + 1;
        double nw = l2_norm(w);
        if (nw < 1e-200) {
            res.value = 0;
            return res;
        }
        for (auto& c : w.coef) c /= nw;
        v = std::move(w);
        if (prev >= 0 && std::fabs(cur - prev) <= rtol * std::max(cur, 1e-300)) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    res.value = prev;
    if (warm) *warm = std::move(v);
    return res;
}

// Grid bisection for the smallest t with N(t) <= 1/2, given an evaluator of
// N on the substep grid. Asserts monotonicity of N over everything evaluated.
struct TdisSearch {
    double dt;
    double tol;
    std::function<double(long)> N_at; // substep index -> operator norm
    std::vector<std::pair<long, double>> evals;

    double eval(long i) {
        double v = N_at(i);
        evals.push_back({i, v});
        return v;
    }

    void assert_monotone() const {
        auto sorted = evals;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
            if (sorted[i + 1].second > sorted[i].second + 5e-3)
                throw Error("dissipation_time: operator norm not monotone");
    }
};

} // namespace detail

// N(t) = ||T^{u,kappa}_{s,s+t}|| for the base flow, power iteration on T*T.
inline double op_norm_at(const FlowRealization& r, double kappa, double s,
                         double t, int M, int substeps, std::uint64_t seed = 1,
                         SpectralField* warm = nullptr, int* iters = nullptr) {
    detail::LegSchedule sch{&r, 1.0, 1.0, substeps};
    long b = detail::snap_step(s, sch.dt(), "op_norm");
    long e = detail::snap_step(s + t, sch.dt(), "op_norm");
    auto fwd = [&](SpectralField& f) {
        detail::advance(sch, kappa, b, e, M, f.coef.data(), false);
    };
    auto adj = [&](SpectralField& f) {
        detail::advance(sch, kappa, b, e, M, f.coef.data(), true);
    };
    auto res = detail::op_norm(fwd, adj, M, seed, warm);
    if (iters) *iters += res.iters;
    return res.value;
}

namespace detail {

inline TdisResult tdis_bisect(double kappa, double s, double dt, double tol,
                              double horizon_time,
                              const std::function<double(long, SpectralField*,
                                                         int*)>& N_of) {
    SpectralField warm;
    int iters = 0;
    TdisSearch search{dt, tol, {}, {}};
    search.N_at = [&](long i) { return N_of(i, &warm, &iters); };

    double right = std::min(horizon_time - s, 1.1 * poincare_bound(kappa));
    long hi = static_cast<long>(std::ceil(right / dt));
    long lo = 0; // N(0) = 1 > 1/2, never evaluated
    long one = std::max<long>(1, std::llround(1.0 / dt));
    double N_hi = search.eval(hi);
    if (N_hi > 0.5)
        throw NoDecayWithinHorizon("dissipation_time: no decay within bracket");
    if (one < hi) {
        double N_one = search.eval(one);
        if (N_one > 0.5) lo = one;
        else hi = one;
    }
    while (hi - lo > 1 &&
           static_cast<double>(hi - lo) * dt > tol * static_cast<double>(hi) * dt) {
        long mid = lo + (hi - lo) / 2;
        if (search.eval(mid) <= 0.5) hi = mid;
        else lo = mid;
    }
    search.assert_monotone();
    TdisResult out;
    out.s = s;
    out.kappa = kappa;
    out.t_dis_hat = static_cast<double>(hi) * dt;
    out.op_norm_at_t = 0;
    for (const auto& [i, v] : search.evals)
        if (i == hi) out.op_norm_at_t = v;
    out.power_iters = iters;
    out.bisection_tol = tol;
    return out;
}

} // namespace detail

inline TdisResult dissipation_time(const FlowRealization& r, double kappa,
                                   double s, int M, double tol,
                                   int substeps = 64, std::uint64_t seed = 1) {
    if (!(kappa > 0)) throw InvalidKappa("dissipation_time: kappa must be > 0");
    detail::LegSchedule sch{&r, 1.0, 1.0, substeps};
    const double dt = sch.dt();
    long b = detail::snap_step(s, dt, "dissipation_time");
    auto N_of = [&](long i, SpectralField* warm, int* iters) {
        auto fwd = [&](SpectralField& f) {
            detail::advance(sch, kappa, b, b + i, M, f.coef.data(), false);
        };
        auto adj = [&](SpectralField& f) {
            detail::advance(sch, kappa, b, b + i, M, f.coef.data(), true);
        };
        auto res = detail::op_norm(fwd, adj, M, seed, warm);
        if (iters) *iters += res.iters;
        return res.value;
    };
    return detail::tdis_bisect(kappa, s, dt, tol,
                               static_cast<double>(r.horizon), N_of);
}

// Dissipation time of the rescaled field v measured in v-time with its own
// diffusivity kappa = eps^2; should equal (1/eps) t_dis(u, eps).
inline TdisResult dissipation_time(const RescaledFlow& v, double kappa,
                                   double s, int M, double tol,
                                   int substeps = 64, std::uint64_t seed = 1) {
    if (!(kappa > 0)) throw InvalidKappa("dissipation_time: kappa must be > 0");
    detail::LegSchedule sch{&v.base, v.leg_duration(), v.eps, substeps};
    const double dt = sch.dt();
    long b = detail::snap_step(s, dt, "dissipation_time");
    auto N_of = [&](long i, SpectralField* warm, int* iters) {
        auto fwd = [&](SpectralField& f) {
            detail::advance(sch, kappa, b, b + i, M, f.coef.data(), false);
        };
        auto adj = [&](SpectralField& f) {
            detail::advance(sch, kappa, b, b + i, M, f.coef.data(), true);
        };
        auto res = detail::op_norm(fwd, adj, M, seed, warm);
        if (iters) *iters += res.iters;
        return res.value;
    };
    double horizon_time = static_cast<double>(v.base.horizon) * v.leg_duration();
    return detail::tdis_bisect(kappa, s, dt, tol, horizon_time, N_of);
}

// Single-step decay check: with mixing-rate envelope H supplied, compute
// (tau, A, B), evolve each datum to tau, and test
// ||theta_tau|| <= sqrt(1 - A) ||theta_0||.
struct PropCheckReport {
    double tau_kappa = 0;
    double a_kappa = 0;
    double b_kappa = 0;
    double worst_ratio = 0;
    double threshold = 0;
    bool ok = false;
};

inline PropCheckReport theorem3_quantities(
    const std::function<double(double)>& H, double grad_u_sup, double kappa,
    const std::vector<SpectralField>& data, const FlowRealization& r, int M,
    int substeps = 64) {
    (void)M;
    PropQuantities q = prop_quantities(H, grad_u_sup, kappa);
    // Snap tau up to the substep grid; the norm is non-increasing in t, so
    // checking slightly later keeps the inequality conservative.
    double dt = 1.0 / substeps;
    double tau = std::ceil(q.tau_kappa / dt) * dt;
    PropCheckReport rep;
    rep.tau_kappa = q.tau_kappa;
    rep.a_kappa = q.A_kappa;
    rep.b_kappa = q.B_kappa;
    rep.threshold = std::sqrt(1.0 - q.A_kappa);
    rep.ok = true;
    for (const auto& theta0 : data) {
        EvolveSpec spec{&r, kappa, 0.0, tau, substeps, 0};
        auto [theta, trace] = evolve(spec, theta0);
        double ratio = l2_norm(theta) / l2_norm(theta0);
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (ratio > rep.threshold * (1.0 + 1e-9)) rep.ok = false;
    }
    return rep;
}

inline PropCheckReport theorem3_quantities(const RateParams& rate,
                                           double grad_u_sup, double kappa,
                                           const std::vector<SpectralField>& data,
                                           const FlowRealization& r, int M,
                                           int substeps = 64) {
    return theorem3_quantities(
        [&](double T) { return rate_envelope(rate, T); }, grad_u_sup, kappa,
        data, r, M, substeps);
}

} // namespace slowmix
