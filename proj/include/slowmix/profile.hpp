#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "torus.hpp"

namespace slowmix {

// Shear profile phi on [0, 2pi] with derivative oracles up to third order.
// Immutable after construction; safe to share across threads.
struct ShearProfile {
    std::function<double(double)> eval;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    std::function<double(double)> d3;
    double sup_norm = 0;   // ||phi||_inf
    double l1_norm = 0;    // ||phi||_L1 over [0, 2pi]
    double d1_sup = 0;     // ||phi'||_inf
    double c1_norm = 0;    // sup_norm + d1_sup
    std::string name;
};

inline ShearProfile make_cosine_bump() {
    ShearProfile p;
    p.eval = [](double x) { return (1.0 - std::cos(x)) / 2.0; };
    p.d1 = [](double x) { return std::sin(x) / 2.0; };
    p.d2 = [](double x) { return std::cos(x) / 2.0; };
    p.d3 = [](double x) { return -std::sin(x) / 2.0; };
    p.sup_norm = 1.0;
    p.l1_norm = two_pi / 2.0; // pi
    p.d1_sup = 0.5;
    p.c1_norm = 1.5;
    p.name = "cosine_bump";
    return p;
}

// phi(x) = c x^2 (2pi - x)^2 normalized to sup-norm 1 (c = 1/pi^4).
inline ShearProfile make_quartic_bump() {
    const double c = 1.0 / std::pow(two_pi / 2.0, 4);
    ShearProfile p;
    p.eval = [c](double x) { double y = two_pi - x; return c * x * x * y * y; };
    p.d1 = [c](double x) { double y = two_pi - x; return c * 2.0 * x * y * (y - x); };
    p.d2 = [c](double x) {
        double y = two_pi - x;
        return c * 2.0 * (y * y - 4.0 * x * y + x * x);
    };
    p.d3 = [c](double x) { return c * 12.0 * (2.0 * x - two_pi); };
    p.sup_norm = 1.0;
    p.l1_norm = c * std::pow(two_pi, 5) / 30.0;
    {
        double m = 0;
        for (int i = 0; i <= 20000; ++i) {
            double x = two_pi * i / 20000.0;
            m = std::max(m, std::fabs(p.d1(x)));
        }
        p.d1_sup = m;
    }
    p.c1_norm = p.sup_norm + p.d1_sup;
    p.name = "quartic_bump";
    return p;
}

// Tabulated profile on a uniform x-grid over [0, 2pi]; each column linearly
// interpolated on its own samples (derivatives are never re-differentiated).
inline ShearProfile make_tabulated(const std::vector<double>& x,
                                   const std::vector<double>& v0,
                                   const std::vector<double>& v1,
                                   const std::vector<double>& v2,
                                   const std::vector<double>& v3,
                                   const std::string& name = "tabulated") {
    if (x.size() < 2 || v0.size() != x.size() || v1.size() != x.size() ||
        v2.size() != x.size() || v3.size() != x.size())
        throw DegenerateProfile("tabulated profile: inconsistent column lengths");
    auto interp = [x](std::vector<double> v) {
        const double x0 = x.front(), x1 = x.back();
        const double h = (x1 - x0) / static_cast<double>(x.size() - 1);
        return [v = std::move(v), x0, h](double q) {
            double s = (q - x0) / h;
            if (s <= 0) return v.front();
            auto last = static_cast<double>(v.size() - 1);
            if (s >= last) return v.back();
            auto i = static_cast<std::size_t>(s);
            double f = s - static_cast<double>(i);
            return v[i] * (1 - f) + v[i + 1] * f;
        };
    };
    ShearProfile p;
    p.eval = interp(v0);
    p.d1 = interp(v1);
    p.d2 = interp(v2);
    p.d3 = interp(v3);
    double sup = 0, d1s = 0, l1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sup = std::max(sup, std::fabs(v0[i]));
        d1s = std::max(d1s, std::fabs(v1[i]));
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        l1 += 0.5 * (std::fabs(v0[i]) + std::fabs(v0[i + 1])) * (x[i + 1] - x[i]);
    p.sup_norm = sup;
    p.l1_norm = l1;
    p.d1_sup = d1s;
    p.c1_norm = sup + d1s;
    p.name = name;
    return p;
}

// CSV columns: x, phi, d1, d2, d3 (uniform x-grid, optional header line).
inline ShearProfile load_tabulated_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DegenerateProfile("cannot open profile CSV: " + path);
    std::vector<double> cols[5];
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        double vals[5];
        int n = 0;
        bool numeric = true;
        while (std::getline(ss, cell, ',') && n < 5) {
            try {
                vals[n] = std::stod(cell);
            } catch (...) {
                numeric = false;
                break;
            }
            ++n;
        }
        if (!numeric) continue; // header
        if (n != 5) throw DegenerateProfile("profile CSV needs 5 columns: " + path);
        for (int i = 0; i < 5; ++i) cols[i].push_back(vals[i]);
    }
    return make_tabulated(cols[0], cols[1], cols[2], cols[3], cols[4], path);
}

// phi_kappa(x) = phi(N x) for N x in [0, 2pi], zero outside.
inline double eval_scaled(const ShearProfile& p, int n_kappa, double x) {
    double y = static_cast<double>(n_kappa) * x;
    if (y < 0 || y > two_pi) return 0.0;
    return p.eval(y);
}

struct AssumptionReport {
    bool a1_ok = false;
    bool a2_ok = false;
    std::vector<double> zeros_d1;
    std::vector<double> zeros_d2;
    double min_d2_at_zeros_d1 = 0;
    double min_d3_at_zeros_d2 = 0;
};

namespace detail {

// Roots of f on [0, 2pi]: sign-change scan on a uniform grid, then bisection.
// Endpoint and grid-exact zeros recorded directly.
inline std::vector<double> scan_roots(const std::function<double(double)>& f,
                                      int grid_points, double tol) {
    std::vector<double> roots;
    const double ztol = 1e-9;
    auto push = [&](double r) {
        for (double q : roots)
            if (std::fabs(q - r) < 100 * tol + 1e-8) return;
        roots.push_back(r);
    };
    double prev_x = 0, prev_f = f(0);
    if (std::fabs(prev_f) < ztol) push(0.0);
    for (int i = 1; i <= grid_points; ++i) {
        double x = two_pi * i / grid_points;
        double fx = f(x);
        if (std::fabs(fx) < ztol) {
            push(x);
        } else if (prev_f != 0 && std::fabs(prev_f) >= ztol &&
                   ((prev_f > 0) != (fx > 0))) {
            double a = prev_x, b = x, fa = prev_f;
            while (b - a > tol) {
                double m = 0.5 * (a + b), fm = f(m);
                if (fm == 0) { a = b = m; break; }
                if ((fa > 0) != (fm > 0)) b = m;
                else { a = m; fa = fm; }
            }
            push(0.5 * (a + b));
        }
        prev_x = x;
        prev_f = fx;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace detail

inline AssumptionReport check_assumptions(const ShearProfile& p, int grid_points,
                                          double tol) {
    if (grid_points < 1000)
        throw DegenerateProfile("check_assumptions: grid_points must be >= 1000");
    AssumptionReport rep;
    rep.zeros_d1 = detail::scan_roots(p.d1, grid_points, tol);
    rep.zeros_d2 = detail::scan_roots(p.d2, grid_points, tol);
    double m2 = std::numeric_limits<double>::infinity();
    for (double r : rep.zeros_d1) {
        double v = std::fabs(p.d2(r));
        if (v < tol)
            throw DegenerateProfile("root of phi' at x=" + std::to_string(r) +
                                    " has |phi''| < tol");
        m2 = std::min(m2, v);
    }
    double m3 = std::numeric_limits<double>::infinity();
    for (double r : rep.zeros_d2) m3 = std::min(m3, std::fabs(p.d3(r)));
    rep.min_d2_at_zeros_d1 = rep.zeros_d1.empty() ? 0 : m2;
    rep.min_d3_at_zeros_d2 = rep.zeros_d2.empty() ? 0 : m3;
    rep.a1_ok = !rep.zeros_d1.empty() && rep.min_d2_at_zeros_d1 > 0;
    rep.a2_ok = !rep.zeros_d2.empty() && rep.min_d3_at_zeros_d2 > 0;
    return rep;
}

} // namespace slowmix
