#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "mrf/fingerprint.hpp"
#include "mrf/sequence.hpp"

namespace mrf {

// Magnetization vector, equilibrium (0,0,1) with unit M0.
struct Magnetization {
    double x = 0;
    double y = 0;
    double z = 1;
};

// Small dense 3x3, row-major. Hand-rolled because rotation composition and
// one matrix-vector product per excitation is the whole workload.
struct Matrix3 {
    double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Matrix3 identity() { return {}; }

    Matrix3 operator*(const Matrix3& o) const {
        Matrix3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[3 * i + j] = m[3 * i] * o.m[j] + m[3 * i + 1] * o.m[3 + j] +
                                 m[3 * i + 2] * o.m[6 + j];
        return r;
    }

    Magnetization operator*(const Magnetization& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
};

enum class Axis { X, Y, Z };

// An RF pulse: nominal flip alpha and phase phi (radians), plus the finite
// duration tau (seconds) and local off-resonance delta_omega (rad/s) that
// the full rotation model needs.
struct RfPulse {
    double alpha = 0;
    double phi = 0;
    double tau = 0;
    double delta_omega = 0;
};

// Counterclockwise rotation by theta about a lab axis.
Matrix3 rot(Axis axis, double theta);

// Relaxation over dt without precession: transverse decay exp(-dt/T2) and
// longitudinal recovery toward unit equilibrium, mz' = 1 + (mz-1)exp(-dt/T1).
Magnetization relax_step(const Magnetization& m, double dt, double t1, double t2);

// Rotation matrix of one RF pulse. The simplified form (default) is
// Rz(phi) Rx(-alpha) Rz(-phi): flips are clockwise about the phase-rotated
// x axis. The full form tilts the rotation axis by the off-resonance during
// the pulse: Rz(phi) Ry(beta) Rx(alpha_eff) Ry(-beta) Rz(-phi) with
// beta = atan(tau*delta_omega/alpha) and
// alpha_eff = -tau*sqrt(delta_omega^2 + (alpha/tau)^2).
// Zero alpha with the full form has no defined axis and throws.
Matrix3 rf_matrix(const RfPulse& pulse, bool simplified = true);

// One repetition: apply the pulse, relax and precess to the echo, sample the
// transverse plane as mx + i*my, then relax and precess over the remainder.
std::pair<std::complex<double>, Magnetization> evolve_tr(const Magnetization& m,
                                                         const RfPulse& pulse,
                                                         double tr, double te,
                                                         const TissueParams& p);

// Inversion-prepared simulation of a whole schedule. The RF rotations depend
// only on the schedule, so they are composed once at construction and shared
// across every tissue parameter set; simulate() then costs four exponentials
// and two trig pairs per excitation.
class BlochSimulator {
  public:
    explicit BlochSimulator(const Schedule& sched);

    // Writes sched.size() echoes. The fingerprint is not normalized.
    void simulate(const TissueParams& p, std::complex<double>* out) const;
    Fingerprint simulate(const TissueParams& p) const;

    std::size_t length() const { return steps_.size(); }

  private:
    struct Step {
        Matrix3 rf;
        double te;
        double rest;  // tr - te
    };
    std::vector<Step> steps_;
};

// Convenience wrapper: one-shot construction and run, bit-identical to the
// class (it is the class).
Fingerprint simulate_fingerprint(const TissueParams& p, const Schedule& sched);

}  // namespace mrf
