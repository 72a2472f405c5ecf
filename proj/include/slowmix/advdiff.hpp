#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "errors.hpp"
#include "flow.hpp"
#include "spectral.hpp"
#include "transport.hpp"

namespace slowmix {

// Solver request for T^{u,kappa}_{s,t}. kappa_solver may differ from the
// realization's construction kappa (the rescaled family needs eps^2 while the
// realization was built at eps).
struct EvolveSpec {
    const FlowRealization* r = nullptr;
    double kappa_solver = 0;
    double s = 0;
    double t = 0;
    int substeps_per_leg = 64;
    int record_every = 0; // 0: endpoints only
};

struct EnergyTrace {
    struct Row {
        double time, l2_sq, h1_sq;
    };
    std::vector<Row> rows;
    double dissipated = 0; // 2 kappa int h1_sq dt, trapezoid on the rows
};

namespace detail {

// Uniform substep schedule over legs of fixed duration. vel_scale rescales the
// shear speed (1 for the base flow, eps for the rescaled family).
struct LegSchedule {
    const FlowRealization* r;
    double leg_duration = 1.0;
    double vel_scale = 1.0;
    int substeps = 64;

    double dt() const { return leg_duration / substeps; }
    long leg_of(long step) const { return step / substeps; }
};

inline long snap_step(double time, double dt, const char* what) {
    double q = time / dt;
    long i = std::llround(q);
    if (std::fabs(q - static_cast<double>(i)) > 1e-6)
        throw Error(std::string(what) + ": time not on the substep grid");
    return i;
}

struct TraceSink {
    EnergyTrace* trace = nullptr;
    int record_every = 0;
};

// Core split-step march over global substeps [b, e) (forward order for the
// solution operator, reverse order with negated velocity for its adjoint).
// Field is held in full Fourier; each substep is
//   half heat multiplier, exact per-line shear phase, half heat multiplier.
// The advection phase table folds in the 1/M of the axis transform pair.
inline void advance(const LegSchedule& sch, double kappa, long b, long e,
                    int M, std::complex<double>* coef, bool adjoint,
                    const TraceSink& sink = {}) {
    if (e <= b) return;
    const double dt = sch.dt();
    const double h = two_pi / M;

    if (sch.r->amplitude == 0 && !sink.trace) {
        // pure heat with no trace requested: all substeps commute, apply one
        // multiplier for the whole span (the horizon check still applies)
        if ((e - 1) / sch.substeps >= sch.r->horizon)
            throw HorizonExceeded("evolve: beyond realization horizon");
        const double total = static_cast<double>(e - b) * dt;
        std::vector<double> hfull(M);
        for (int i = 0; i < M; ++i) {
            double k = kfreq(i, M);
            hfull[i] = std::exp(-kappa * k * k * total);
        }
        for (int i1 = 0; i1 < M; ++i1)
            for (int i2 = 0; i2 < M; ++i2)
                coef[static_cast<std::size_t>(i1) * M + i2] *=
                    hfull[i1] * hfull[i2];
        return;
    }

    std::vector<double> hhalf(M), k2tab(M);
    for (int i = 0; i < M; ++i) {
        double k = kfreq(i, M);
        k2tab[i] = k * k;
        hhalf[i] = std::exp(-0.5 * kappa * k * k * dt);
    }

    auto apply_heat_half = [&](std::complex<double>* f) {
        if (kappa == 0) return;
        for (int i1 = 0; i1 < M; ++i1) {
            double a = hhalf[i1];
            for (int i2 = 0; i2 < M; ++i2)
                f[static_cast<std::size_t>(i1) * M + i2] *= a * hhalf[i2];
        }
    };

    long cached_leg = -1;
    bool cached_adj = false;
    std::vector<std::complex<double>> phase; // per-leg advection table / M
    auto build_phase = [&](long leg) {
        phase.assign(static_cast<std::size_t>(M) * M, 0);
        std::vector<double> psi(M);
        for (int j = 0; j < M; ++j)
            psi[j] = sch.vel_scale * shear_speed(*sch.r, leg, j * h);
        const double sgn = adjoint ? 1.0 : -1.0;
        const double invM = 1.0 / M;
        if (leg % 2 == 0) {
            // horizontal: x1 shifted by dt psi(x2); diagonal in (k1, x2)
            for (int i1 = 0; i1 < M; ++i1) {
                double k1 = kfreq(i1, M);
                for (int i2 = 0; i2 < M; ++i2)
                    phase[static_cast<std::size_t>(i1) * M + i2] =
                        std::polar(invM, sgn * k1 * dt * psi[i2]);
            }
        } else {
            // vertical: x2 shifted by dt psi(x1); diagonal in (x1, k2)
            for (int i1 = 0; i1 < M; ++i1)
                for (int i2 = 0; i2 < M; ++i2) {
                    double k2 = kfreq(i2, M);
                    phase[static_cast<std::size_t>(i1) * M + i2] =
                        std::polar(invM, sgn * k2 * dt * psi[i1]);
                }
        }
        cached_leg = leg;
        cached_adj = adjoint;
    };

    auto record = [&](double time) {
        if (!sink.trace) return;
        double l2 = 0, h1 = 0;
        for (int i1 = 0; i1 < M; ++i1)
            for (int i2 = 0; i2 < M; ++i2) {
                double e2 = std::norm(coef[static_cast<std::size_t>(i1) * M + i2]);
                l2 += e2;
                h1 += (k2tab[i1] + k2tab[i2]) * e2;
            }
        sink.trace->rows.push_back({time, l2, h1});
    };

    record(static_cast<double>(b) * dt);
    long steps = e - b;
    for (long n = 0; n < steps; ++n) {
        long step = adjoint ? e - 1 - n : b + n;
        long leg = sch.leg_of(step);
        if (leg >= sch.r->horizon)
            throw HorizonExceeded("evolve: beyond realization horizon");
        apply_heat_half(coef);
        if (sch.r->amplitude != 0) {
            // zero-amplitude legs are the identity; skip the transform pair
            if (leg != cached_leg || adjoint != cached_adj) build_phase(leg);
            fft::Kind bwd = (leg % 2 == 0) ? fft::bwd_axis1 : fft::bwd_axis0;
            fft::Kind fwd = (leg % 2 == 0) ? fft::fwd_axis1 : fft::fwd_axis0;
            fft::execute(M, bwd, coef);
            for (std::size_t i = 0; i < phase.size(); ++i) coef[i] *= phase[i];
            fft::execute(M, fwd, coef);
        }
        apply_heat_half(coef);

        bool at_record = sink.record_every > 0 && (n + 1) % sink.record_every == 0;
        if (at_record || n + 1 == steps)
            record(static_cast<double>(adjoint ? step : step + 1) * dt);
    }
    if (sink.trace) {
        auto& rows = sink.trace->rows;
        double acc = 0;
        for (std::size_t i = 0; i + 1 < rows.size(); ++i)
            acc += 0.5 * (rows[i].h1_sq + rows[i + 1].h1_sq) *
                   std::fabs(rows[i + 1].time - rows[i].time);
        sink.trace->dissipated = 2.0 * kappa * acc;
    }
}

} // namespace detail

inline std::pair<SpectralField, EnergyTrace> evolve(const EvolveSpec& spec,
                                                    const SpectralField& init) {
    if (std::abs(init.coef[0]) > 1e-10)
        throw NotMeanZero("evolve: initial field has nonzero mean");
    if (spec.t < spec.s) throw Error("evolve: t < s");
    detail::LegSchedule sch{spec.r, 1.0, 1.0, spec.substeps_per_leg};
    long b = detail::snap_step(spec.s, sch.dt(), "evolve");
    long e = detail::snap_step(spec.t, sch.dt(), "evolve");
    SpectralField out = init;
    EnergyTrace trace;
    detail::advance(sch, spec.kappa_solver, b, e, out.M, out.coef.data(), false,
                    {&trace, spec.record_every});
    return {std::move(out), std::move(trace)};
}

inline SpectralField adjoint_evolve(const EvolveSpec& spec,
                                    const SpectralField& init) {
    if (std::abs(init.coef[0]) > 1e-10)
        throw NotMeanZero("adjoint_evolve: initial field has nonzero mean");
    detail::LegSchedule sch{spec.r, 1.0, 1.0, spec.substeps_per_leg};
    long b = detail::snap_step(spec.s, sch.dt(), "adjoint_evolve");
    long e = detail::snap_step(spec.t, sch.dt(), "adjoint_evolve");
    SpectralField out = init;
    detail::advance(sch, spec.kappa_solver, b, e, out.M, out.coef.data(), true);
    return out;
}

// Rescaled-family evolution in v-time: legs last 1/eps, shear speeds carry a
// factor eps, and the matching diffusivity is kappa = eps^2.
inline std::pair<SpectralField, EnergyTrace> evolve_rescaled(
    const RescaledFlow& v, double kappa_solver, double s, double t,
    int substeps_per_leg, const SpectralField& init, bool adjoint = false,
    int record_every = 0) {
    if (std::abs(init.coef[0]) > 1e-10)
        throw NotMeanZero("evolve_rescaled: initial field has nonzero mean");
    detail::LegSchedule sch{&v.base, v.leg_duration(), v.eps, substeps_per_leg};
    long b = detail::snap_step(s, sch.dt(), "evolve_rescaled");
    long e = detail::snap_step(t, sch.dt(), "evolve_rescaled");
    SpectralField out = init;
    EnergyTrace trace;
    detail::advance(sch, kappa_solver, b, e, out.M, out.coef.data(), adjoint,
                    {record_every > 0 ? &trace : nullptr, record_every});
    return {std::move(out), std::move(trace)};
}

// Max relative defect of the discrete energy identity
// d/dt ||theta||^2 = -2 kappa ||grad theta||^2 over a trace with
// record_every = 1 (trapezoid in h1 between consecutive rows).
inline double energy_identity_defect(const EnergyTrace& trace, double kappa) {
    double worst = 0;
    for (std::size_t i = 0; i + 1 < trace.rows.size(); ++i) {
        const auto& a = trace.rows[i];
        const auto& b = trace.rows[i + 1];
        double delta = b.time - a.time;
        if (delta <= 0 || a.l2_sq <= 0) continue;
        double defect =
            std::fabs((b.l2_sq - a.l2_sq) +
                      2.0 * kappa * 0.5 * (a.h1_sq + b.h1_sq) * delta) /
            (a.l2_sq * delta);
        worst = std::max(worst, defect);
    }
    return worst;
}

// Slack of the closeness estimate between the diffusive and transport
// solutions started from the same trig-polynomial datum:
//   ||theta^k_t - theta^0_t|| <= e^3 sqrt(kappa) (||grad theta_0|| +
//       sqrt(||grad u||_inf + 1) int_0^t ||grad theta^k_s|| ds).
// Returns RHS - LHS; a negative value beyond rounding indicates solver error.
inline double closeness_check(const FlowRealization& r, double kappa,
                              const TrigPolynomial& init, double t, int M,
                              int substeps_per_leg = 64) {
    SpectralField f0 = pullback_at_time(r, 0.0, 0.0, init, M);
    EvolveSpec spec{&r, kappa, 0.0, t, substeps_per_leg, 1};
    auto [fk, trace] = evolve(spec, f0);
    SpectralField f_transport = pullback_at_time(r, 0.0, t, init, M);
    double lhs = 0;
    for (std::size_t i = 0; i < fk.coef.size(); ++i)
        lhs += std::norm(fk.coef[i] - f_transport.coef[i]);
    lhs = std::sqrt(lhs);

    double integral = 0;
    for (std::size_t i = 0; i + 1 < trace.rows.size(); ++i)
        integral += 0.5 *
                    (std::sqrt(trace.rows[i].h1_sq) +
                     std::sqrt(trace.rows[i + 1].h1_sq)) *
                    (trace.rows[i + 1].time - trace.rows[i].time);
    double grad_u = gradient_sup_bound(r);
    double rhs = std::exp(3.0) * std::sqrt(kappa) *
                 (sobolev_norm(f0, 1.0) + std::sqrt(grad_u + 1.0) * integral);
    return rhs - lhs;
}

} // namespace slowmix
