#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "errors.hpp"
#include "flow.hpp"
#include "rng.hpp"
#include "torus.hpp"
#include "transport.hpp"

namespace slowmix {

// A pair of passive tracers advected by the same realization; the object of
// the two-point chain. sep_inf is the max of the two T^1 coordinate distances.
struct PointPair {
    Point x{};
    Point y{};

    double sep_inf() const {
        return std::max(t1_dist(x[0], y[0]), t1_dist(x[1], y[1]));
    }
};

// V(x, y) = sep_inf^{-p}, blowing up at the diagonal.
inline double lyapunov_v(const PointPair& pair, double p) {
    double s = pair.sep_inf();
    if (s <= 0) throw OnDiagonal("lyapunov_v: coincident pair");
    return std::pow(s, -p);
}

inline PointPair two_point_advance(const FlowRealization& r, PointPair pair,
                                   long legs, long start_leg = 0) {
    if (start_leg + legs > r.horizon)
        throw HorizonExceeded("two_point_advance: beyond horizon");
    for (long leg = start_leg; leg < start_leg + legs; ++leg) {
        pair.x = leg_map(r, leg, pair.x, 1.0);
        pair.y = leg_map(r, leg, pair.y, 1.0);
    }
    return pair;
}

struct DriftEstimate {
    double p = 0;
    int n_legs = 0;
    long samples = 0;
    double mean_ratio = 0;
    double ci95_upper = 0;
    double band = 0;
};

namespace detail {

// Uniform start pair: position uniform on T^2, separation s uniform in
// [band/10, band] in the sup metric, offset uniform on the l-inf sphere of
// radius s (pick the saturated coordinate, then slide along the other).
inline PointPair sample_pair(CounterRng& rng, double band) {
    PointPair pair;
    pair.x = {rng.uniform(0, two_pi), rng.uniform(0, two_pi)};
    double s = rng.uniform(band / 10.0, band);
    double other = rng.uniform(-s, s);
    double d0, d1;
    if (rng.next_u01() < 0.5) {
        d0 = rng.next_u01() < 0.5 ? s : -s;
        d1 = other;
    } else {
        d0 = other;
        d1 = rng.next_u01() < 0.5 ? s : -s;
    }
    pair.y = {wrap2pi(pair.x[0] + d0), wrap2pi(pair.x[1] + d1)};
    return pair;
}

inline double bootstrap_ci95_upper(const std::vector<double>& vals,
                                   std::uint64_t seed, int resamples = 200) {
    CounterRng rng(hash2(seed, 0xb005ULL));
    std::vector<double> means;
    means.reserve(resamples);
    const auto n = vals.size();
    for (int b = 0; b < resamples; ++b) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += vals[rng.next_below(n)];
        means.push_back(acc / static_cast<double>(n));
    }
    std::sort(means.begin(), means.end());
    auto idx = static_cast<std::size_t>(0.95 * (resamples - 1));
    return means[idx];
}

} // namespace detail

// Annealed Monte Carlo estimate of E[V(after)/V(before)] over start pairs in
// the given separation band, a fresh realization per sample.
inline DriftEstimate drift_estimate(double kappa, double amplitude, double p,
                                    double band, long samples, int legs,
                                    std::uint64_t seed,
                                    std::shared_ptr<const ShearProfile> profile) {
    if (samples < 1000) throw Error("drift_estimate: need samples >= 1000");
    if (!(band > 0) || band > two_pi / 2.0)
        throw Error("drift_estimate: band must lie in (0, pi]");
    std::vector<double> ratios;
    ratios.reserve(samples);
    double acc = 0;
    for (long i = 0; i < samples; ++i) {
        CounterRng rng(hash3(seed, 0xd21f7ULL, static_cast<std::uint64_t>(i)));
        PointPair pair = detail::sample_pair(rng, band);
        double v0 = lyapunov_v(pair, p);
        FlowRealization r = realize(kappa, amplitude, profile, rng.next_u64(),
                                    2L * legs + 2);
        PointPair after = two_point_advance(r, pair, 2L * legs);
        double ratio = lyapunov_v(after, p) / v0;
        ratios.push_back(ratio);
        acc += ratio;
    }
    DriftEstimate est;
    est.p = p;
    est.n_legs = 2 * legs;
    est.samples = samples;
    est.band = band;
    est.mean_ratio = acc / static_cast<double>(samples);
    est.ci95_upper = detail::bootstrap_ci95_upper(ratios, seed);
    return est;
}

struct FosterStratum {
    double band_lo = 0;
    double band_hi = 0;
    double mean_v_before = 0;
    double mean_v_after = 0;
    double slack = 0; // E[V_after] - (gamma1 E[V_before] + K)
};

struct FosterReport {
    double gamma1_hat = 0;
    double k_hat = 0;
    double p = 0;
    std::vector<FosterStratum> strata;
};

// Three pair-of-leg steps of the chain across log-spaced separation strata
// covering [eta/N^3, pi]; gamma1 is fit on the near-diagonal strata
// (separation <= s_star/N), K on the rest.
inline FosterReport foster_lyapunov_check(double kappa, double amplitude,
                                          double p, long samples,
                                          std::uint64_t seed,
                                          std::shared_ptr<const ShearProfile> profile,
                                          double s_star = 0.5, double eta = 0.5,
                                          int n_strata = 12) {
    FosterReport rep;
    rep.p = p;
    int n_kappa = static_cast<int>(std::ceil(1.0 / kappa));
    double lo = eta / std::pow(static_cast<double>(n_kappa), 3);
    double hi = two_pi / 2.0;
    long per = std::max<long>(samples / n_strata, 100);
    for (int s = 0; s < n_strata; ++s) {
        double b0 = lo * std::pow(hi / lo, static_cast<double>(s) / n_strata);
        double b1 = lo * std::pow(hi / lo, static_cast<double>(s + 1) / n_strata);
        double vb = 0, va = 0;
        for (long i = 0; i < per; ++i) {
            CounterRng rng(hash3(hash2(seed, s), 0xf057e2ULL,
                                 static_cast<std::uint64_t>(i)));
            PointPair pair;
            pair.x = {rng.uniform(0, two_pi), rng.uniform(0, two_pi)};
            double sep = b0 * std::pow(b1 / b0, rng.next_u01());
            double other = rng.uniform(-sep, sep);
            double d0 = rng.next_u01() < 0.5 ? (rng.next_u01() < 0.5 ? sep : -sep)
                                             : other;
            double d1 = (std::fabs(d0) == sep) ? other
                                               : (rng.next_u01() < 0.5 ? sep : -sep);
            pair.y = {wrap2pi(pair.x[0] + d0), wrap2pi(pair.x[1] + d1)};
            vb += lyapunov_v(pair, p);
            FlowRealization r = realize(kappa, amplitude, profile,
                                        rng.next_u64(), 8);
            PointPair after = two_point_advance(r, pair, 6);
            va += lyapunov_v(after, p);
        }
        FosterStratum st;
        st.band_lo = b0;
        st.band_hi = b1;
        st.mean_v_before = vb / static_cast<double>(per);
        st.mean_v_after = va / static_cast<double>(per);
        rep.strata.push_back(st);
    }
    double near_cut = s_star / n_kappa;
    double gamma1 = 0;
    for (const auto& st : rep.strata)
        if (st.band_hi <= near_cut && st.mean_v_before > 0)
            gamma1 = std::max(gamma1, st.mean_v_after / st.mean_v_before);
    rep.gamma1_hat = std::min(gamma1, 1.0);
    double k = 0;
    for (const auto& st : rep.strata)
        k = std::max(k, st.mean_v_after - rep.gamma1_hat * st.mean_v_before);
    rep.k_hat = std::max(k, 0.0);
    for (auto& st : rep.strata)
        st.slack = st.mean_v_after - (rep.gamma1_hat * st.mean_v_before + rep.k_hat);
    return rep;
}

struct MinorizationReport {
    double alpha_hat = 0;
    double ci_low = 0;
    int bins = 0;
    long samples = 0;
};

// Empirical minorization probe: 3 pair-of-leg steps from a few fixed start
// pairs, histogrammed on a coarse partition of T^2 x T^2 with cells touching
// the diagonal band of width eta/N excluded. alpha_hat is the worst cell's
// empirical mass relative to the uniform reference on the off-band region.
inline MinorizationReport minorization_probe(double kappa, double amplitude,
                                             long samples, int coarse_bins,
                                             std::uint64_t seed,
                                             std::shared_ptr<const ShearProfile> profile,
                                             double eta = 0.5) {
    if (coarse_bins > 16) throw Error("minorization_probe: at most 16 bins/axis");
    int n_kappa = static_cast<int>(std::ceil(1.0 / kappa));
    double band_w = eta / n_kappa;
    double start_sep = eta / std::pow(static_cast<double>(n_kappa), 3);
    const int nb = coarse_bins;
    const double cell = two_pi / nb;

    // T^1 distance lower bound between two bin intervals.
    auto bin_min_dist = [&](int a, int b) {
        if (a == b) return 0.0;
        double lo_a = a * cell, hi_a = (a + 1) * cell;
        double lo_b = b * cell, hi_b = (b + 1) * cell;
        double d1 = std::min(t1_dist(hi_a, lo_b), t1_dist(lo_a, hi_b));
        // adjacent or wrapped-adjacent intervals touch
        if (t1_dist(hi_a, lo_b) < 1e-12 || t1_dist(lo_a, hi_b) < 1e-12) return 0.0;
        return d1;
    };

    std::vector<char> offband(static_cast<std::size_t>(nb) * nb * nb * nb, 0);
    long n_off = 0;
    for (int a1 = 0; a1 < nb; ++a1)
        for (int a2 = 0; a2 < nb; ++a2)
            for (int b1 = 0; b1 < nb; ++b1)
                for (int b2 = 0; b2 < nb; ++b2) {
                    double m = std::max(bin_min_dist(a1, b1), bin_min_dist(a2, b2));
                    bool off = m >= band_w;
                    std::size_t idx =
                        ((static_cast<std::size_t>(a1) * nb + a2) * nb + b1) * nb +
                        b2;
                    offband[idx] = off ? 1 : 0;
                    if (off) ++n_off;
                }
    if (n_off == 0) throw Error("minorization_probe: band covers the partition");

    // Few starts, many samples each: the worst off-band cell needs an expected
    // count well above the Poisson noise floor before alpha_hat means anything.
    const int n_starts = 2;
    MinorizationReport rep;
    rep.bins = coarse_bins;
    rep.samples = samples;
    double worst = -1, worst_count = 0, worst_total = 0;
    for (int sidx = 0; sidx < n_starts; ++sidx) {
        CounterRng srng(hash3(seed, 0x57a27ULL, static_cast<std::uint64_t>(sidx)));
        PointPair start;
        start.x = {srng.uniform(0, two_pi), srng.uniform(0, two_pi)};
        start.y = {wrap2pi(start.x[0] + start_sep), start.x[1]};
        long per = samples / n_starts;
        std::vector<long> hist(offband.size(), 0);
        for (long i = 0; i < per; ++i) {
            CounterRng rng(hash3(hash2(seed, sidx), 0x4157ULL,
                                 static_cast<std::uint64_t>(i)));
            FlowRealization r =
                realize(kappa, amplitude, profile, rng.next_u64(), 8);
            PointPair after = two_point_advance(r, start, 6);
            auto bin = [&](double c) {
                int b = static_cast<int>(wrap2pi(c) / cell);
                return std::min(b, nb - 1);
            };
            std::size_t idx = ((static_cast<std::size_t>(bin(after.x[0])) * nb +
                                bin(after.x[1])) *
                                   nb +
                               bin(after.y[0])) *
                                  nb +
                              bin(after.y[1]);
            ++hist[idx];
        }
        for (std::size_t c = 0; c < hist.size(); ++c) {
            if (!offband[c]) continue;
            double mass = static_cast<double>(hist[c]) / static_cast<double>(per);
            double ref = 1.0 / static_cast<double>(n_off);
            double a = mass / ref;
            if (worst < 0 || a < worst) {
                worst = a;
                worst_count = static_cast<double>(hist[c]);
                worst_total = static_cast<double>(per);
            }
        }
    }
    rep.alpha_hat = std::max(worst, 0.0);
    // Poisson-style lower confidence on the binding cell.
    double low_count = std::max(worst_count - 1.96 * std::sqrt(worst_count), 0.0);
    rep.ci_low = worst_total > 0
                     ? (low_count / worst_total) * static_cast<double>(n_off)
                     : 0.0;
    return rep;
}

} // namespace slowmix
