#include "mrf/bloch.hpp"

#include <cmath>
#include <stdexcept>

namespace mrf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Relax and precess the magnetization over dt. Transverse: counterclockwise
// rotation by 2*pi*df*dt scaled by exp(-dt/T2); the two commute, computed
// rotate-then-scale. Longitudinal: recovery toward unit equilibrium.
inline void relax_precess(Magnetization& m, double dt, double inv_t1, double inv_t2,
                          double df) {
    double e2 = std::exp(-dt * inv_t2);
    double e1 = std::exp(-dt * inv_t1);
    double a = kTwoPi * df * dt;
    double c = std::cos(a);
    double s = std::sin(a);
    double x = (m.x * c - m.y * s) * e2;
    double y = (m.x * s + m.y * c) * e2;
    m.x = x;
    m.y = y;
    m.z = 1.0 + (m.z - 1.0) * e1;
}

}  // namespace

Matrix3 rot(Axis axis, double theta) {
    double c = std::cos(theta);
    double s = std::sin(theta);
    Matrix3 r;
    switch (axis) {
        case Axis::X:
            r.m[0] = 1; r.m[1] = 0;  r.m[2] = 0;
            r.m[3] = 0; r.m[4] = c;  r.m[5] = -s;
            r.m[6] = 0; r.m[7] = s;  r.m[8] = c;
            break;
        case Axis::Y:
            r.m[0] = c;  r.m[1] = 0; r.m[2] = s;
            r.m[3] = 0;  r.m[4] = 1; r.m[5] = 0;
            r.m[6] = -s; r.m[7] = 0; r.m[8] = c;
            break;
        case Axis::Z:
            r.m[0] = c; r.m[1] = -s; r.m[2] = 0;
            r.m[3] = s; r.m[4] = c;  r.m[5] = 0;
            r.m[6] = 0; r.m[7] = 0;  r.m[8] = 1;
            break;
    }
    return r;
}

Magnetization relax_step(const Magnetization& m, double dt, double t1, double t2) {
    if (dt < 0 || t1 <= 0 || t2 <= 0)
        throw std::invalid_argument("relax_step: dt must be >= 0 and T1, T2 > 0");
    double e2 = std::exp(-dt / t2);
    double e1 = std::exp(-dt / t1);
    return {m.x * e2, m.y * e2, 1.0 + (m.z - 1.0) * e1};
}

Matrix3 rf_matrix(const RfPulse& pulse, bool simplified) {
    if (simplified)
        return rot(Axis::Z, pulse.phi) * rot(Axis::X, -pulse.alpha) *
               rot(Axis::Z, -pulse.phi);
    if (pulse.alpha == 0)
        throw std::invalid_argument(
            "rf_matrix: full rotation model is undefined for a zero flip angle");
    if (pulse.tau <= 0)
        throw std::invalid_argument("rf_matrix: full rotation model needs tau > 0");
    double beta = std::atan(pulse.tau * pulse.delta_omega / pulse.alpha);
    double rate = pulse.alpha / pulse.tau;
    double alpha_eff =
        -pulse.tau * std::sqrt(pulse.delta_omega * pulse.delta_omega + rate * rate);
    return rot(Axis::Z, pulse.phi) * rot(Axis::Y, beta) * rot(Axis::X, alpha_eff) *
           rot(Axis::Y, -beta) * rot(Axis::Z, -pulse.phi);
}

std::pair<std::complex<double>, Magnetization> evolve_tr(const Magnetization& m,
                                                         const RfPulse& pulse,
                                                         double tr, double te,
                                                         const TissueParams& p) {
    if (te < 0 || te > tr)
        throw std::invalid_argument("evolve_tr: need 0 <= te <= tr");
    if (p.t1 <= 0 || p.t2 <= 0)
        throw std::invalid_argument("evolve_tr: T1 and T2 must be positive");
    Magnetization cur = rf_matrix(pulse) * m;
    relax_precess(cur, te, 1.0 / p.t1, 1.0 / p.t2, p.df);
    std::complex<double> echo(cur.x, cur.y);
    relax_precess(cur, tr - te, 1.0 / p.t1, 1.0 / p.t2, p.df);
    return {echo, cur};
}

BlochSimulator::BlochSimulator(const Schedule& sched) {
    steps_.reserve(sched.size());
    for (const auto& e : sched.entries) {
        if (e.te_ms < 0 || e.te_ms > e.tr_ms)
            throw std::invalid_argument("BlochSimulator: schedule needs 0 <= te <= tr");
        Step s;
        s.rf = rf_matrix({e.flip_rad(), e.phase_rad(), 0, 0});
        s.te = e.te_s();
        s.rest = e.tr_s() - e.te_s();
        steps_.push_back(s);
    }
}

void BlochSimulator::simulate(const TissueParams& p, std::complex<double>* out) const {
    if (p.t1 <= 0 || p.t2 <= 0)
        throw std::invalid_argument("simulate: T1 and T2 must be positive");
    double inv_t1 = 1.0 / p.t1;
    double inv_t2 = 1.0 / p.t2;
    // Adiabatic inversion: 180 degrees about x, phase 0.
    static const Matrix3 kInvert = rf_matrix({3.14159265358979323846, 0, 0, 0});
    Magnetization m = kInvert * Magnetization{0, 0, 1};
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const Step& st = steps_[i];
        m = st.rf * m;
        relax_precess(m, st.te, inv_t1, inv_t2, p.df);
        out[i] = {m.x, m.y};
        relax_precess(m, st.rest, inv_t1, inv_t2, p.df);
    }
}

Fingerprint BlochSimulator::simulate(const TissueParams& p) const {
    Fingerprint fp;
    fp.s.resize(steps_.size());
    simulate(p, fp.s.data());
    return fp;
}

Fingerprint simulate_fingerprint(const TissueParams& p, const Schedule& sched) {
    return BlochSimulator(sched).simulate(p);
}

}  // namespace mrf
