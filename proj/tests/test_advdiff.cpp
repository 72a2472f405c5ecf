#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "slowmix/advdiff.hpp"

#include <cmath>
#include <memory>

using namespace slowmix;

namespace {

std::shared_ptr<const ShearProfile> bump() {
    static auto p = std::make_shared<ShearProfile>(make_cosine_bump());
    return p;
}

double diff_norm(const SpectralField& a, const SpectralField& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.coef.size(); ++i)
        s += std::norm(a.coef[i] - b.coef[i]);
    return std::sqrt(s);
}

} // namespace

TEST_CASE("pure heat decays each mode exactly") {
    auto r = realize(1.0 / 8.0, 0.0, bump(), 1, 8);
    SpectralField init(64);
    init.at(1, 0) = {0.0, -0.5};
    init.at(63, 0) = {0.0, 0.5};
    init.at(3, 62) = {0.2, 0.1};
    init.at(61, 2) = {0.2, -0.1};
    const double kappa = 0.05, t = 3.0;
    auto [f, trace] = evolve({&r, kappa, 0.0, t, 16, 0}, init);
    CHECK(std::abs(f.at(1, 0) -
                   init.at(1, 0) * std::exp(-kappa * 1.0 * t)) < 1e-12);
    CHECK(std::abs(f.at(3, 62) -
                   init.at(3, 62) * std::exp(-kappa * 13.0 * t)) < 1e-12);
    CHECK(trace.rows.front().l2_sq ==
          doctest::Approx(l2_norm(init) * l2_norm(init)).epsilon(1e-12));
}

TEST_CASE("zero diffusivity reproduces exact transport") {
    auto r = realize(1.0 / 8.0, 2.0, bump(), 9, 8);
    auto init = random_trig(12, 2);
    auto f0 = pullback_at_time(r, 0.0, 0.0, init, 256);
    // one full horizontal leg: the split scheme is exact for kappa = 0 up to
    // the sampling of the initial datum
    auto [f, trace] = evolve({&r, 0.0, 0.0, 1.0, 64, 0}, f0);
    auto g = pullback_at_time(r, 0.0, 1.0, init, 256);
    CHECK(diff_norm(f, g) < 1e-10);
    // once the axes couple, the two representations differ only by the
    // spectral tail the grid cannot carry: the gap must shrink with M and be
    // independent of the substep count
    auto err_at = [&](int M, int sub) {
        auto h0 = pullback_at_time(r, 0.0, 0.0, init, M);
        auto [h, tr] = evolve({&r, 0.0, 0.0, 2.0, sub, 0}, h0);
        auto ref = pullback_at_time(r, 0.0, 2.0, init, M);
        return diff_norm(h, ref);
    };
    double e256 = err_at(256, 64);
    CHECK(e256 < 1e-3);
    CHECK(err_at(512, 64) < e256 / 3.0);
    CHECK(err_at(256, 16) == doctest::Approx(e256).epsilon(1e-10));
}

TEST_CASE("self-convergence in the substep count") {
    auto r = realize(1.0 / 8.0, 2.0, bump(), 10, 8);
    auto f0 = pullback_at_time(r, 0.0, 0.0, random_trig(5, 2), 128);
    const double kappa = 0.05;
    auto run = [&](int sub) {
        auto [f, tr] = evolve({&r, kappa, 0.0, 2.0, sub, 0}, f0);
        return f;
    };
    auto ref = run(512);
    double e16 = diff_norm(run(16), ref);
    double e32 = diff_norm(run(32), ref);
    double e64 = diff_norm(run(64), ref);
    // Strang splitting: second order in dt
    CHECK(e16 / e32 > 3.5);
    CHECK(e32 / e64 > 3.5);
}

TEST_CASE("horizontal legs preserve the k1 energy profile") {
    auto r = realize(1.0 / 8.0, 50.0, bump(), 14, 4);
    auto f0 = pullback_at_time(r, 0.0, 0.0, random_trig(6, 3), 256);
    auto [f, tr] = evolve({&r, 0.0, 0.0, 1.0, 32, 0}, f0);
    // per-k1 energy is invariant under x1 shifts that depend only on x2
    for (int i1 = 0; i1 < 256; i1 += 13) {
        double a = 0, b = 0;
        for (int i2 = 0; i2 < 256; ++i2) {
            a += std::norm(f0.at(i1, i2));
            b += std::norm(f.at(i1, i2));
        }
        CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }
}

TEST_CASE("semigroup property on the substep grid") {
    auto r = realize(1.0 / 8.0, 2.0, bump(), 21, 8);
    auto f0 = pullback_at_time(r, 0.0, 0.0, random_trig(9, 2), 128);
    const double kappa = 0.02;
    auto [whole, t1] = evolve({&r, kappa, 0.0, 3.0, 32, 0}, f0);
    auto [half, t2] = evolve({&r, kappa, 0.0, 1.5, 32, 0}, f0);
    auto [rest, t3] = evolve({&r, kappa, 1.5, 3.0, 32, 0}, half);
    CHECK(diff_norm(whole, rest) < 1e-12);
}

TEST_CASE("mean stays zero and the L2 norm contracts") {
    auto r = realize(1.0 / 8.0, 50.0, bump(), 33, 8);
    auto f0 = pullback_at_time(r, 0.0, 0.0, random_trig(2, 2), 128);
    double prev = l2_norm(f0);
    for (int n = 1; n <= 4; ++n) {
        auto [f, tr] = evolve({&r, 0.05, 0.0, static_cast<double>(n), 32, 0}, f0);
        CHECK(std::abs(f.mean()) < 1e-13);
        double cur = l2_norm(f);
        CHECK(cur <= prev * (1 + 1e-12));
        prev = cur;
    }
}

TEST_CASE("non-mean-zero data are rejected") {
    auto r = realize(1.0 / 8.0, 1.0, bump(), 2, 4);
    SpectralField f(32);
    f.at(0, 0) = 1.0;
    CHECK_THROWS_AS(evolve({&r, 0.1, 0.0, 1.0, 8, 0}, f), NotMeanZero);
    CHECK_THROWS_AS(adjoint_evolve({&r, 0.1, 0.0, 1.0, 8, 0}, f), NotMeanZero);
}

TEST_CASE("times must sit on the substep grid") {
    auto r = realize(1.0 / 8.0, 1.0, bump(), 2, 4);
    SpectralField f(32);
    f.at(1, 0) = 1.0;
    f.at(31, 0) = 1.0;
    CHECK_THROWS_AS(evolve({&r, 0.1, 0.0, 1.0 + 0.3 / 8.0, 8, 0}, f), Error);
}

TEST_CASE("adjoint duality <f, T g> = <T* f, g>") {
    auto r = realize(1.0 / 8.0, 3.0, bump(), 44, 8);
    auto f = random_bandlimited(1, 10, 128);
    auto g = random_bandlimited(2, 10, 128);
    EvolveSpec spec{&r, 0.03, 0.0, 3.0, 32, 0};
    auto [Tg, tr] = evolve(spec, g);
    auto Tsf = adjoint_evolve(spec, f);
    CHECK(inner(f, Tg) == doctest::Approx(inner(Tsf, g)).epsilon(1e-10));
}

TEST_CASE("kappa = 0 adjoint is composition with the forward flow map") {
    // weak stirring keeps both representations resolved at this grid
    auto r = realize(1.0 / 8.0, 0.2, bump(), 51, 8);
    auto init = random_trig(13, 2);
    auto f0 = pullback_at_time(r, 0.0, 0.0, init, 256);
    auto adj = adjoint_evolve({&r, 0.0, 0.0, 2.0, 64, 0}, f0);
    // (T^*)f(x) = f(Phi_{0,2}(x)): sample init along the forward map
    std::vector<double> vals(static_cast<std::size_t>(256) * 256);
    const double h = two_pi / 256;
    for (int i1 = 0; i1 < 256; ++i1)
        for (int i2 = 0; i2 < 256; ++i2) {
            Point y = flow_map_between(r, 0.0, 2.0, {i1 * h, i2 * h}, false);
            vals[static_cast<std::size_t>(i1) * 256 + i2] = init.eval(y);
        }
    auto ref = SpectralField::from_samples(256, vals);
    CHECK(diff_norm(adj, ref) < 1e-4);
}

TEST_CASE("energy identity defect shrinks with the substep count") {
    auto r = realize(1.0 / 8.0, 10.0, bump(), 60, 8);
    auto f0 = pullback_at_time(r, 0.0, 0.0, random_trig(3, 2), 128);
    const double kappa = 0.05;
    auto defect = [&](int sub) {
        auto [f, tr] = evolve({&r, kappa, 0.0, 2.0, sub, 1}, f0);
        return energy_identity_defect(tr, kappa);
    };
    double d16 = defect(16), d32 = defect(32), d64 = defect(64);
    CHECK(d32 < d16);
    CHECK(d64 < d32);
    CHECK(d16 / d64 > 3.5);
}

TEST_CASE("trace records dissipated energy consistently") {
    auto r = realize(1.0 / 8.0, 5.0, bump(), 71, 8);
    auto f0 = pullback_at_time(r, 0.0, 0.0, random_trig(6, 2), 128);
    const double kappa = 0.05;
    auto [f, tr] = evolve({&r, kappa, 0.0, 4.0, 64, 1}, f0);
    double lost = tr.rows.front().l2_sq - tr.rows.back().l2_sq;
    CHECK(tr.dissipated == doctest::Approx(lost).epsilon(1e-2));
}

TEST_CASE("rescaled evolution matches the base solver leg by leg") {
    auto r = realize(1.0 / 8.0, 2.0, bump(), 80, 8);
    auto v = rescale(r);
    auto f0 = pullback_at_time(r, 0.0, 0.0, random_trig(7, 2), 128);
    // one v-leg of duration 1/eps at solver kappa k equals one u-leg at the
    // same kappa scaled: substituting s = eps t maps the generators onto each
    // other only for kappa = 0, so check the exact transport case
    auto [a, tra] = evolve_rescaled(v, 0.0, 0.0, v.leg_duration(), 64, f0);
    auto [b, trb] = evolve({&r, 0.0, 0.0, 1.0, 64, 0}, f0);
    CHECK(diff_norm(a, b) < 1e-10);
}

TEST_CASE("closeness slack is nonnegative and degenerate cases collapse") {
    auto r = realize(1.0 / 8.0, 0.5, bump(), 90, 8);
    TrigPolynomial init;
    init.set(1, 0, {0.0, -0.5});
    double slack = closeness_check(r, 1.0 / 8.0, init, 2.0, 128, 64);
    CHECK(slack >= -1e-8);
    // with A = 0 both solutions coincide up to the heat factor; the estimate
    // holds with a large margin
    auto r0 = realize(1.0 / 8.0, 0.0, bump(), 91, 8);
    double slack0 = closeness_check(r0, 1.0 / 8.0, init, 2.0, 64, 16);
    CHECK(slack0 > 0.0);
}
