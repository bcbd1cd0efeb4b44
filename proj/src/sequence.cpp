#include "mrf/sequence.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mrf/rng.hpp"
#include "mrf/util.hpp"

namespace mrf {

namespace {

constexpr double kDeg2Rad = 0.017453292519943295;

// Gradient of the value-noise lattice cell i: uniform in [-1,1).
double lattice_grad(std::uint64_t seed, std::int64_t i) {
    return 2.0 * rng::uniform01(seed, rng::kStreamFlip,
                                static_cast<std::uint64_t>(i)) - 1.0;
}

// Classic one-dimensional Perlin noise: per-cell gradients, quintic fade.
double perlin1d(std::uint64_t seed, double x) {
    double fx = std::floor(x);
    auto i0 = static_cast<std::int64_t>(fx);
    double t = x - fx;
    double n0 = lattice_grad(seed, i0) * t;
    double n1 = lattice_grad(seed, i0 + 1) * (t - 1.0);
    double u = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
    return n0 + u * (n1 - n0);
}

// Affine remap of a series so min -> lo and max -> hi. A constant series
// maps to all-lo.
void remap(std::vector<double>& v, double lo, double hi) {
    if (v.empty()) return;
    double mn = v[0], mx = v[0];
    for (double x : v) {
        mn = std::min(mn, x);
        mx = std::max(mx, x);
    }
    if (mx == mn) {
        for (double& x : v) x = lo;
        return;
    }
    double scale = (hi - lo) / (mx - mn);
    for (double& x : v) x = lo + (x - mn) * scale;
}

}  // namespace

std::vector<double> perlin_flips(std::size_t n, std::uint64_t seed) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k)
        v[k] = perlin1d(seed, static_cast<double>(k) / 16.0);
    remap(v, 0.0, 79.0 * kDeg2Rad);
    return v;
}

std::vector<double> phase_pattern(std::size_t n) {
    static const double cycle[4] = {0.0, 90.0 * kDeg2Rad, 180.0 * kDeg2Rad,
                                    90.0 * kDeg2Rad};
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = cycle[k % 4];
    return v;
}

std::vector<double> tr_pattern(std::size_t n, std::uint64_t seed) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = rng::gaussian(seed, rng::kStreamTr, k);
    remap(v, 0.0, 6e-3);
    for (double& x : v) x += 14e-3;
    return v;
}

Schedule build_schedule(std::size_t n, std::uint64_t seed) {
    auto flips = perlin_flips(n, seed);
    auto phases = phase_pattern(n);
    auto trs = tr_pattern(n, seed);
    Schedule sched;
    sched.seed = seed;
    sched.entries.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        ScheduleEntry& e = sched.entries[k];
        e.flip_deg = quantize9(flips[k] / kDeg2Rad);
        e.phase_deg = quantize9(phases[k] / kDeg2Rad);
        e.tr_ms = quantize9(trs[k] * 1e3);
        e.te_ms = quantize9(trs[k] * 1e3 / 2.0);
    }
    return sched;
}

std::string to_csv(const Schedule& sched) {
    std::ostringstream os;
    os << "idx,flip_deg,phase_deg,tr_ms,te_ms\n";
    for (std::size_t k = 0; k < sched.size(); ++k) {
        const ScheduleEntry& e = sched.entries[k];
        os << k << ',' << fmt_g9(e.flip_deg) << ',' << fmt_g9(e.phase_deg) << ','
           << fmt_g9(e.tr_ms) << ',' << fmt_g9(e.te_ms) << '\n';
    }
    return os.str();
}

void save_csv(const Schedule& sched, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path.string());
    f << to_csv(sched);
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

Schedule load_schedule_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open schedule: " + path.string());
    std::string line;
    if (!std::getline(f, line) ||
        split_csv_line(line) !=
            std::vector<std::string>{"idx", "flip_deg", "phase_deg", "tr_ms", "te_ms"})
        throw std::runtime_error("bad schedule header in " + path.string());
    Schedule sched;
    std::size_t expect = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cols = split_csv_line(line);
        if (cols.size() != 5)
            throw std::runtime_error("bad schedule row in " + path.string() + ": " + line);
        if (static_cast<std::size_t>(parse_double(cols[0])) != expect)
            throw std::runtime_error("non-sequential idx in " + path.string());
        ScheduleEntry e;
        e.flip_deg = parse_double(cols[1]);
        e.phase_deg = parse_double(cols[2]);
        e.tr_ms = parse_double(cols[3]);
        e.te_ms = parse_double(cols[4]);
        if (e.tr_ms <= 0 || e.te_ms < 0 || e.te_ms > e.tr_ms)
            throw std::runtime_error("invalid timing in " + path.string() + ": " + line);
        sched.entries.push_back(e);
        ++expect;
    }
    return sched;
}

}  // namespace mrf
