#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "torus.hpp"

namespace slowmix {

namespace fft {

enum Kind {
    fwd2d = 0,
    bwd2d = 1,
    fwd_axis0 = 2,
    bwd_axis0 = 3,
    fwd_axis1 = 4,
    bwd_axis1 = 5,
};

// Plans are cached per (M, kind) and executed via the new-array interface.
// FFTW planning is not thread safe; execution is. FFTW_UNALIGNED removes the
// alignment contract so any buffer works.
inline fftw_plan plan_for(int M, Kind kind) {
    static std::map<long, fftw_plan> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    long key = static_cast<long>(M) * 8 + kind;
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<std::complex<double>> buf(static_cast<std::size_t>(M) * M);
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    int n[1] = {M};
    switch (kind) {
        case fwd2d:
            plan = fftw_plan_dft_2d(M, M, p, p, FFTW_FORWARD, flags);
            break;
        case bwd2d:
            plan = fftw_plan_dft_2d(M, M, p, p, FFTW_BACKWARD, flags);
            break;
        case fwd_axis0:
            plan = fftw_plan_many_dft(1, n, M, p, nullptr, M, 1, p, nullptr, M, 1,
                                      FFTW_FORWARD, flags);
            break;
        case bwd_axis0:
            plan = fftw_plan_many_dft(1, n, M, p, nullptr, M, 1, p, nullptr, M, 1,
                                      FFTW_BACKWARD, flags);
            break;
        case fwd_axis1:
            plan = fftw_plan_many_dft(1, n, M, p, nullptr, 1, M, p, nullptr, 1, M,
                                      FFTW_FORWARD, flags);
            break;
        case bwd_axis1:
            plan = fftw_plan_many_dft(1, n, M, p, nullptr, 1, M, p, nullptr, 1, M,
                                      FFTW_BACKWARD, flags);
            break;
    }
    cache[key] = plan;
    return plan;
}

inline void execute(int M, Kind kind, std::complex<double>* data) {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan_for(M, kind), p, p);
}

} // namespace fft

// Integer frequency for FFT bin i on an M-point grid: {-M/2, ..., M/2-1}.
inline int kfreq(int i, int M) { return i < M / 2 ? i : i - M; }

// Mean-zero-capable real scalar field on the uniform M x M grid over
// [0, 2pi]^2, stored as normalized Fourier coefficients fhat(k) with
// f(x) = sum_k fhat(k) e^{i k.x}. Norms use the normalized measure
// dx/(2pi)^2, so Parseval reads grid-avg f^2 = sum |fhat|^2.
struct SpectralField {
    int M = 0;
    std::vector<std::complex<double>> coef; // layout [i1 * M + i2], FFT order

    SpectralField() = default;
    explicit SpectralField(int M_)
        : M(M_), coef(static_cast<std::size_t>(M_) * M_) {}

    std::complex<double>& at(int i1, int i2) {
        return coef[static_cast<std::size_t>(i1) * M + i2];
    }
    const std::complex<double>& at(int i1, int i2) const {
        return coef[static_cast<std::size_t>(i1) * M + i2];
    }

    std::complex<double> mean() const { return coef[0]; }

    static SpectralField from_samples(int M, const std::vector<double>& vals) {
        SpectralField f(M);
        for (std::size_t i = 0; i < f.coef.size(); ++i) f.coef[i] = vals[i];
        fft::execute(M, fft::fwd2d, f.coef.data());
        const double inv = 1.0 / (static_cast<double>(M) * M);
        for (auto& c : f.coef) c *= inv;
        return f;
    }

    std::vector<double> samples() const {
        std::vector<std::complex<double>> buf(coef);
        fft::execute(M, fft::bwd2d, buf.data());
        std::vector<double> out(buf.size());
        for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
        return out;
    }
};

inline double l2_norm(const SpectralField& f) {
    double s = 0;
    for (const auto& c : f.coef) s += std::norm(c);
    return std::sqrt(s);
}

inline double inner(const SpectralField& f, const SpectralField& g) {
    double s = 0;
    for (std::size_t i = 0; i < f.coef.size(); ++i)
        s += (f.coef[i] * std::conj(g.coef[i])).real();
    return s;
}

// Homogeneous Sobolev norm (sum over k != 0 of |k|^{2s} |fhat|^2)^{1/2}.
inline double sobolev_norm(const SpectralField& f, double s) {
    if (s < 0 && std::abs(f.coef[0]) > 1e-10)
        throw NotMeanZero("negative-order norm of a non-mean-zero field");
    double acc = 0;
    for (int i1 = 0; i1 < f.M; ++i1) {
        for (int i2 = 0; i2 < f.M; ++i2) {
            int k1 = kfreq(i1, f.M), k2 = kfreq(i2, f.M);
            if (k1 == 0 && k2 == 0) continue;
            double k2sum = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            acc += std::pow(k2sum, s) * std::norm(f.at(i1, i2));
        }
    }
    return std::sqrt(acc);
}

// Pi_{<=R}: keep |k| <= R (Euclidean), zero the rest.
inline SpectralField project_low(const SpectralField& f, double R) {
    SpectralField g(f.M);
    const double r2 = R * R;
    for (int i1 = 0; i1 < f.M; ++i1)
        for (int i2 = 0; i2 < f.M; ++i2) {
            double k1 = kfreq(i1, f.M), k2 = kfreq(i2, f.M);
            if (k1 * k1 + k2 * k2 <= r2) g.at(i1, i2) = f.at(i1, i2);
        }
    return g;
}

inline SpectralField project_high(const SpectralField& f, double R) {
    SpectralField g(f.M);
    const double r2 = R * R;
    for (int i1 = 0; i1 < f.M; ++i1)
        for (int i2 = 0; i2 < f.M; ++i2) {
            double k1 = kfreq(i1, f.M), k2 = kfreq(i2, f.M);
            if (k1 * k1 + k2 * k2 > r2) g.at(i1, i2) = f.at(i1, i2);
        }
    return g;
}

// L^2 energy fraction above the top octave |k| > M/4; grid-scale content here
// signals that sampling no longer resolves the field.
inline double top_octave_fraction(const SpectralField& f) {
    double hi = 0, tot = 0;
    const double r2 = (f.M / 4.0) * (f.M / 4.0);
    for (int i1 = 0; i1 < f.M; ++i1)
        for (int i2 = 0; i2 < f.M; ++i2) {
            double k1 = kfreq(i1, f.M), k2 = kfreq(i2, f.M);
            double e = std::norm(f.at(i1, i2));
            tot += e;
            if (k1 * k1 + k2 * k2 > r2) hi += e;
        }
    return tot > 0 ? hi / tot : 0.0;
}

// Mean-zero real field, independent unit-variance Gaussian coefficients on
// 0 < |k| <= k_max, normalized to L^2 norm 1. Deterministic in the seed.
inline SpectralField random_bandlimited(std::uint64_t seed, int k_max, int M) {
    if (k_max >= M / 2) throw Error("random_bandlimited: k_max must be < M/2");
    SpectralField f(M);
    CounterRng rng(hash2(seed, 0x5eedf1e1dULL));
    for (int k1 = -k_max; k1 <= k_max; ++k1) {
        for (int k2 = -k_max; k2 <= k_max; ++k2) {
            // half-plane: k1 > 0, or k1 == 0 and k2 > 0
            if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
            if (k1 * k1 + k2 * k2 > k_max * k_max) continue;
            double u1 = rng.next_u01(), u2 = rng.next_u01();
            if (u1 < 1e-300) u1 = 1e-300;
            double rr = std::sqrt(-2.0 * std::log(u1));
            std::complex<double> z(rr * std::cos(two_pi * u2),
                                   rr * std::sin(two_pi * u2));
            int i1 = (k1 + M) % M, i2 = (k2 + M) % M;
            int j1 = (M - k1) % M, j2 = (M - k2) % M;
            f.at(i1, i2) = z;
            f.at(j1, j2) = std::conj(z);
        }
    }
    double n = l2_norm(f);
    for (auto& c : f.coef) c /= n;
    return f;
}

// Flat binary snapshot: row-major float64 samples plus a JSON header file.
inline void export_binary(const SpectralField& f, const std::string& path) {
    auto vals = f.samples();
    std::ofstream bin(path, std::ios::binary);
    bin.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(double)));
    std::ofstream hdr(path + ".json");
    hdr << "{\"M\": " << f.M << ", \"layout\": \"row-major\", "
        << "\"dtype\": \"float64\"}\n";
}

inline SpectralField import_binary(const std::string& path) {
    std::ifstream hdr(path + ".json");
    if (!hdr) throw Error("missing header: " + path + ".json");
    std::string text((std::istreambuf_iterator<char>(hdr)),
                     std::istreambuf_iterator<char>());
    auto pos = text.find("\"M\":");
    if (pos == std::string::npos) throw Error("bad header: " + path + ".json");
    int M = std::stoi(text.substr(pos + 4));
    std::vector<double> vals(static_cast<std::size_t>(M) * M);
    std::ifstream bin(path, std::ios::binary);
    if (!bin) throw Error("missing binary: " + path);
    bin.read(reinterpret_cast<char*>(vals.data()),
             static_cast<std::streamsize>(vals.size() * sizeof(double)));
    return SpectralField::from_samples(M, vals);
}

// Spectrum CSV: k1, k2, Re fhat, Im fhat.
inline void export_spectrum_csv(const SpectralField& f, const std::string& path) {
    std::ofstream out(path);
    out << "k1,k2,re,im\n";
    out.precision(17);
    for (int i1 = 0; i1 < f.M; ++i1)
        for (int i2 = 0; i2 < f.M; ++i2) {
            const auto& c = f.at(i1, i2);
            if (c == std::complex<double>(0, 0)) continue;
            out << kfreq(i1, f.M) << ',' << kfreq(i2, f.M) << ',' << c.real()
                << ',' << c.imag() << '\n';
        }
}

} // namespace slowmix
