#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace mrf {

// Tissue parameters in SI units: relaxation times in seconds, off-resonance
// in Hz, proton density as a dimensionless scale.
struct TissueParams {
    double t1 = 0;
    double t2 = 0;
    double df = 0;
    double pd = 1.0;
};

// A complex signal timecourse, one sample per excitation. unit_norm marks
// vectors already scaled to unit L2 norm so the correlation can skip the
// denominator.
struct Fingerprint {
    std::vector<std::complex<double>> s;
    bool unit_norm = false;

    std::size_t size() const { return s.size(); }
};

// Scale to unit L2 norm. The all-zero vector has no direction.
Fingerprint normalize(const Fingerprint& fp);

// Magnitude of the normalized complex inner product, in [0,1]. Insensitive
// to a global scale or a global phase on either argument. When both inputs
// are flagged unit-norm the denominator is skipped.
double cc(const Fingerprint& a, const Fingerprint& b);

// Plain L2 distance between the sample vectors.
double euclidean(const Fingerprint& a, const Fingerprint& b);

// Add i.i.d. complex Gaussian noise, standard deviation sigma per real
// channel, drawn from the counter stream of `seed`. Same seed, same noise.
Fingerprint add_noise(const Fingerprint& fp, double sigma, std::uint64_t seed);

// Find sigma such that cc(fp, add_noise(fp, sigma, seed)) lands within
// +/-0.02 of target_cc. Bisection with a bracket-growing prelude; throws if
// the seeded noise direction cannot reach the target (its limiting
// correlation sits above target + tolerance) or if 60 refinement steps
// cannot meet the tolerance.
double calibrate_noise(const Fingerprint& fp, double target_cc, std::uint64_t seed);

// A noisy realization whose correlation with fp is within +/-0.02 of
// target_cc. Attempt 0 uses `seed` directly; when that noise direction
// cannot reach the target, up to seven further deterministic realizations
// derived from `seed` are tried, and the seed actually used is reported.
struct CalibratedNoise {
    double sigma = 0;
    std::uint64_t seed = 0;
    Fingerprint noisy;
};
CalibratedNoise make_calibrated_noise(const Fingerprint& fp, double target_cc,
                                      std::uint64_t seed);

// Gaussian moving average over k=3 (sigma 0.85 samples) or k=5 (sigma 1.0)
// taps, truncated and renormalized at the edges. Real and imaginary parts
// are filtered independently.
Fingerprint smooth(const Fingerprint& fp, int k);

// ||acquired|| / ||matched_ideal||: the proton-density scale that maps the
// unit-scale simulated fingerprint onto the acquired one. Both arguments are
// raw (un-normalized) signals.
double estimate_pd(const Fingerprint& acquired, const Fingerprint& matched_ideal);

// CSV layout: header "idx,re,im", one row per sample, %.9g fields.
void save_csv(const Fingerprint& fp, const std::filesystem::path& path);
Fingerprint load_fingerprint_csv(const std::filesystem::path& path);

}  // namespace mrf
