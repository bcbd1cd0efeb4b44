#include <doctest.h>

#include <cmath>
#include <complex>

#include "mrf/bloch.hpp"
#include "mrf/rng.hpp"
#include "mrf/sequence.hpp"
#include "oracle.hpp"

using namespace mrf;

namespace {

Magnetization to_mag(const oracle::Vec3& v) { return {v.x, v.y, v.z}; }

double dist(const Magnetization& a, const oracle::Vec3& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

oracle::Vec3 axis_vec(Axis a) {
    switch (a) {
        case Axis::X: return {1, 0, 0};
        case Axis::Y: return {0, 1, 0};
        default: return {0, 0, 1};
    }
}

}  // namespace

TEST_CASE("rotation matrices are orthogonal with unit determinant") {
    for (Axis ax : {Axis::X, Axis::Y, Axis::Z}) {
        for (int k = 0; k < 8; ++k) {
            double th = 2.0 * M_PI * rng::uniform01(3, 0, k) - M_PI;
            Matrix3 r = rot(ax, th);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    double dot = r.m[3 * i] * r.m[3 * j] + r.m[3 * i + 1] * r.m[3 * j + 1] +
                                 r.m[3 * i + 2] * r.m[3 * j + 2];
                    CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-14);
                }
            double det = r.m[0] * (r.m[4] * r.m[8] - r.m[5] * r.m[7]) -
                         r.m[1] * (r.m[3] * r.m[8] - r.m[5] * r.m[6]) +
                         r.m[2] * (r.m[3] * r.m[7] - r.m[4] * r.m[6]);
            CHECK(std::abs(det - 1.0) < 1e-14);
        }
    }
}

TEST_CASE("rotations are counterclockwise and match the Rodrigues formula") {
    // Counterclockwise handedness: +90 about z maps x to y, about x maps y
    // to z, about y maps z to x.
    CHECK(dist(rot(Axis::Z, M_PI / 2) * Magnetization{1, 0, 0}, {0, 1, 0}) < 1e-15);
    CHECK(dist(rot(Axis::X, M_PI / 2) * Magnetization{0, 1, 0}, {0, 0, 1}) < 1e-15);
    CHECK(dist(rot(Axis::Y, M_PI / 2) * Magnetization{0, 0, 1}, {1, 0, 0}) < 1e-15);

    for (Axis ax : {Axis::X, Axis::Y, Axis::Z}) {
        for (int k = 0; k < 10; ++k) {
            double th = 4.0 * M_PI * rng::uniform01(4, 0, k) - 2.0 * M_PI;
            oracle::Vec3 v{2.0 * rng::uniform01(4, 1, k) - 1.0,
                           2.0 * rng::uniform01(4, 2, k) - 1.0,
                           2.0 * rng::uniform01(4, 3, k) - 1.0};
            Magnetization got = rot(ax, th) * to_mag(v);
            oracle::Vec3 want = oracle::rodrigues(v, axis_vec(ax), th);
            CHECK(dist(got, want) < 1e-12);
        }
    }
}

TEST_CASE("relaxation step matches the closed form and is contractive") {
    double t1 = 0.8, t2 = 0.06;
    Magnetization m{0.3, -0.5, -0.4};
    double dt = 0.012;
    Magnetization r = relax_step(m, dt, t1, t2);
    double e2 = std::exp(-dt / t2), e1 = std::exp(-dt / t1);
    CHECK(r.x == doctest::Approx(m.x * e2).epsilon(1e-14));
    CHECK(r.y == doctest::Approx(m.y * e2).epsilon(1e-14));
    CHECK(r.z == doctest::Approx(1.0 + (m.z - 1.0) * e1).epsilon(1e-14));

    // dt = 0 is the identity.
    Magnetization id = relax_step(m, 0.0, t1, t2);
    CHECK(dist(id, {m.x, m.y, m.z}) < 1e-15);

    // Transverse magnitude shrinks, longitudinal moves monotonically to 1.
    for (int k = 0; k < 20; ++k) {
        Magnetization q{2 * rng::uniform01(5, 0, k) - 1, 2 * rng::uniform01(5, 1, k) - 1,
                        2 * rng::uniform01(5, 2, k) - 1};
        Magnetization s = relax_step(q, 0.004, t1, t2);
        CHECK(std::hypot(s.x, s.y) <= std::hypot(q.x, q.y) + 1e-15);
        CHECK(s.z <= 1.0 + 1e-15);
        CHECK(s.z >= q.z - 1e-15);
    }

    CHECK_THROWS(relax_step(m, -1e-9, t1, t2));
    CHECK_THROWS(relax_step(m, dt, 0.0, t2));
    CHECK_THROWS(relax_step(m, dt, t1, -0.1));
}

TEST_CASE("a 90 degree pulse from equilibrium lands on +y") {
    Magnetization m = rf_matrix({M_PI / 2, 0, 0, 0}) * Magnetization{0, 0, 1};
    CHECK(dist(m, {0, 1, 0}) < 1e-15);
    // Shifting the pulse phase by 90 degrees moves the result to -x.
    Magnetization m2 = rf_matrix({M_PI / 2, M_PI / 2, 0, 0}) * Magnetization{0, 0, 1};
    CHECK(dist(m2, {-1, 0, 0}) < 1e-15);
    // Inversion flips z.
    Magnetization m3 = rf_matrix({M_PI, 0.3, 0, 0}) * Magnetization{0, 0, 1};
    CHECK(dist(m3, {0, 0, -1}) < 1e-12);
}

TEST_CASE("pulse rotation agrees with the Rodrigues reference") {
    for (int k = 0; k < 12; ++k) {
        double alpha = M_PI * rng::uniform01(6, 0, k);
        double phi = 2.0 * M_PI * rng::uniform01(6, 1, k);
        oracle::Vec3 v{2 * rng::uniform01(6, 2, k) - 1, 2 * rng::uniform01(6, 3, k) - 1,
                       2 * rng::uniform01(6, 4, k) - 1};
        Magnetization got = rf_matrix({alpha, phi, 0, 0}) * to_mag(v);
        oracle::Vec3 want = oracle::apply_rf(v, alpha, phi);
        CHECK(dist(got, want) < 1e-12);
    }
}

TEST_CASE("full pulse model reduces to the simplified one on resonance") {
    for (int k = 0; k < 10; ++k) {
        double alpha = 0.05 + 3.0 * rng::uniform01(7, 0, k);
        double phi = 2.0 * M_PI * rng::uniform01(7, 1, k);
        RfPulse p{alpha, phi, 1e-3, 0.0};
        Matrix3 a = rf_matrix(p, false);
        Matrix3 b = rf_matrix(p, true);
        for (int i = 0; i < 9; ++i) CHECK(std::abs(a.m[i] - b.m[i]) < 1e-12);
    }
}

TEST_CASE("full pulse model stays a proper rotation off resonance") {
    RfPulse p{M_PI / 3, 0.7, 0.8e-3, 2 * M_PI * 120.0};
    Matrix3 r = rf_matrix(p, false);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double dot = r.m[3 * i] * r.m[3 * j] + r.m[3 * i + 1] * r.m[3 * j + 1] +
                         r.m[3 * i + 2] * r.m[3 * j + 2];
            CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-13);
        }
    // No defined axis at zero flip; zero duration divides by zero.
    CHECK_THROWS(rf_matrix({0.0, 0.0, 1e-3, 100.0}, false));
    CHECK_THROWS(rf_matrix({M_PI / 4, 0.0, 0.0, 100.0}, false));
}

TEST_CASE("one repetition matches the analytic echo on resonance") {
    TissueParams p{0.8, 0.06, 0.0, 1.0};
    double alpha = M_PI / 3, te = 8e-3, tr = 16e-3;
    auto [echo, after] = evolve_tr({0, 0, 1}, {alpha, 0, 0, 0}, tr, te, p);
    // RF tips equilibrium to (0, sin a, cos a); the echo is the decayed
    // transverse part, purely imaginary under phase 0.
    std::complex<double> want{0.0, std::sin(alpha) * std::exp(-te / p.t2)};
    CHECK(std::abs(echo - want) < 1e-14);
    CHECK(after.y == doctest::Approx(std::sin(alpha) * std::exp(-tr / p.t2)).epsilon(1e-13));
    CHECK(after.z ==
          doctest::Approx(1.0 + (std::cos(alpha) - 1.0) * std::exp(-tr / p.t1)).epsilon(1e-13));

    CHECK_THROWS(evolve_tr({0, 0, 1}, {alpha, 0, 0, 0}, 16e-3, 17e-3, p));
    CHECK_THROWS(evolve_tr({0, 0, 1}, {alpha, 0, 0, 0}, 16e-3, -1e-3, p));
}

TEST_CASE("one repetition matches fine-step integrators off resonance") {
    TissueParams p{1.2, 0.09, 130.0, 1.0};
    double alpha = 0.9, phi = M_PI / 2, te = 7.3e-3, tr = 15.1e-3;
    auto [echo, after] = evolve_tr({0.1, -0.2, 0.7}, {alpha, phi, 0, 0}, tr, te, p);

    oracle::Vec3 m{0.1, -0.2, 0.7};
    m = oracle::apply_rf(m, alpha, phi);
    oracle::Vec3 at_echo = oracle::rk4_evolve(m, p.t1, p.t2, p.df, te, 1e-6);
    oracle::Vec3 at_end = oracle::rk4_evolve(at_echo, p.t1, p.t2, p.df, tr - te, 1e-6);
    CHECK(std::abs(echo - std::complex<double>{at_echo.x, at_echo.y}) < 1e-9);
    CHECK(dist(after, at_end) < 1e-9);

    // The simpler Euler integrator agrees too, at its coarser accuracy, on a
    // resonant interval.
    TissueParams q{0.8, 0.05, 0.0, 1.0};
    auto [echo0, after0] = evolve_tr({0, 0, 1}, {alpha, 0, 0, 0}, tr, te, q);
    oracle::Vec3 e = oracle::apply_rf({0, 0, 1}, alpha, 0.0);
    e = oracle::euler_evolve(e, q.t1, q.t2, q.df, te, 1e-6);
    CHECK(std::abs(echo0 - std::complex<double>{e.x, e.y}) < 1e-5);
    (void)after0;
}

TEST_CASE("full series simulation tracks the reference integrator") {
    Schedule sched = build_schedule(500, 1);
    BlochSimulator sim(sched);
    for (int k = 0; k < 2; ++k) {
        TissueParams p{(100 + 5390 * rng::uniform01(8, 0, k)) * 1e-3,
                       (50 + 1140 * rng::uniform01(8, 1, k)) * 1e-3,
                       std::floor(601 * rng::uniform01(8, 2, k)) - 300.0, 1.0};
        CAPTURE(p.t1);
        CAPTURE(p.t2);
        CAPTURE(p.df);
        Fingerprint fp = sim.simulate(p);
        auto ref = oracle::simulate_series(sched, p, 2e-6);
        double scale = 0;
        for (auto& v : ref) scale = std::max(scale, std::abs(v));
        double worst = 0;
        for (std::size_t j = 0; j < ref.size(); ++j)
            worst = std::max(worst, std::abs(fp.s[j] - ref[j]));
        CHECK(worst / scale < 1e-4);
    }
}

TEST_CASE("wrapper and simulator class produce identical samples") {
    Schedule sched = build_schedule(120, 9);
    TissueParams p{0.95, 0.21, 37.0, 1.0};
    Fingerprint a = simulate_fingerprint(p, sched);
    Fingerprint b = BlochSimulator(sched).simulate(p);
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(a.s[j] == b.s[j]);
    CHECK_FALSE(a.unit_norm);
}

TEST_CASE("simulator rejects invalid timing and parameters") {
    Schedule bad = build_schedule(8, 2);
    bad.entries[3].te_ms = bad.entries[3].tr_ms + 1.0;
    CHECK_THROWS(BlochSimulator{bad});
    Schedule good = build_schedule(8, 2);
    BlochSimulator sim(good);
    CHECK_THROWS(sim.simulate({0.0, 0.1, 0.0, 1.0}));
    CHECK_THROWS(sim.simulate({1.0, -0.1, 0.0, 1.0}));
}
