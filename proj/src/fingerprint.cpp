#include "mrf/fingerprint.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mrf/rng.hpp"
#include "mrf/util.hpp"

namespace mrf {

namespace {

double norm2(const Fingerprint& fp) {
    double acc = 0;
    for (const auto& v : fp.s) acc += v.real() * v.real() + v.imag() * v.imag();
    return std::sqrt(acc);
}

void check_same_length(const Fingerprint& a, const Fingerprint& b, const char* op) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(op) + ": length mismatch");
    if (a.size() == 0) throw std::invalid_argument(std::string(op) + ": empty input");
}

}  // namespace

Fingerprint normalize(const Fingerprint& fp) {
    double n = norm2(fp);
    if (n == 0) throw std::invalid_argument("normalize: zero fingerprint");
    Fingerprint out;
    out.s.reserve(fp.size());
    double inv = 1.0 / n;
    for (const auto& v : fp.s) out.s.emplace_back(v.real() * inv, v.imag() * inv);
    out.unit_norm = true;
    return out;
}

double cc(const Fingerprint& a, const Fingerprint& b) {
    check_same_length(a, b, "cc");
    double re = 0, im = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        // a_j * conj(b_j)
        re += a.s[j].real() * b.s[j].real() + a.s[j].imag() * b.s[j].imag();
        im += a.s[j].imag() * b.s[j].real() - a.s[j].real() * b.s[j].imag();
    }
    double num = std::sqrt(re * re + im * im);
    if (!(a.unit_norm && b.unit_norm)) {
        double na = norm2(a);
        double nb = norm2(b);
        if (na == 0 || nb == 0) throw std::invalid_argument("cc: zero fingerprint");
        num /= na * nb;
    }
    return num < 1.0 ? num : 1.0;
}

double euclidean(const Fingerprint& a, const Fingerprint& b) {
    check_same_length(a, b, "euclidean");
    double acc = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double dr = a.s[j].real() - b.s[j].real();
        double di = a.s[j].imag() - b.s[j].imag();
        acc += dr * dr + di * di;
    }
    return std::sqrt(acc);
}

Fingerprint add_noise(const Fingerprint& fp, double sigma, std::uint64_t seed) {
    if (sigma < 0) throw std::invalid_argument("add_noise: sigma must be >= 0");
    Fingerprint out;
    out.s.reserve(fp.size());
    for (std::size_t j = 0; j < fp.size(); ++j) {
        double nr = rng::gaussian(seed, rng::kStreamNoise, 2 * j);
        double ni = rng::gaussian(seed, rng::kStreamNoise, 2 * j + 1);
        out.s.emplace_back(fp.s[j].real() + sigma * nr, fp.s[j].imag() + sigma * ni);
    }
    return out;
}

double calibrate_noise(const Fingerprint& fp, double target_cc, std::uint64_t seed) {
    if (!(target_cc > 0 && target_cc < 1))
        throw std::invalid_argument("calibrate_noise: target must be in (0,1)");
    auto cc_at = [&](double sigma) { return cc(fp, add_noise(fp, sigma, seed)); };
    // cc(0) = 1; grow the upper bracket until the correlation drops below
    // target, then bisect. The noise shape is fixed by the seed, so cc is a
    // smooth, effectively monotone function of sigma that converges to the
    // fixed noise-direction correlation as sigma grows. Low targets near that
    // floor may be reachable only within tolerance, so the growth loop
    // accepts a within-tolerance sigma instead of insisting on a bracket.
    double lo = 0;
    double hi = norm2(fp) / std::sqrt(static_cast<double>(fp.size()));
    double c = cc_at(hi);
    for (int i = 0; i < 80 && c > target_cc; ++i) {
        if (std::abs(c - target_cc) <= 0.02) return hi;
        hi *= 2;
        c = cc_at(hi);
    }
    if (c > target_cc)
        throw std::runtime_error("calibrate_noise: cannot bracket target");
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        double c = cc_at(mid);
        if (std::abs(c - target_cc) <= 0.02) return mid;
        (c > target_cc ? lo : hi) = mid;
    }
    throw std::runtime_error("calibrate_noise: no sigma within tolerance after 60 steps");
}

CalibratedNoise make_calibrated_noise(const Fingerprint& fp, double target_cc,
                                      std::uint64_t seed) {
    for (int attempt = 0;; ++attempt) {
        std::uint64_t s = attempt == 0 ? seed : rng::at(seed, 99, attempt);
        try {
            double sigma = calibrate_noise(fp, target_cc, s);
            return {sigma, s, add_noise(fp, sigma, s)};
        } catch (const std::runtime_error&) {
            if (attempt >= 7) throw;
        }
    }
}

Fingerprint smooth(const Fingerprint& fp, int k) {
    if (k != 3 && k != 5) throw std::invalid_argument("smooth: kernel must be 3 or 5");
    if (fp.size() == 0) throw std::invalid_argument("smooth: empty input");
    double sigma = (k == 3) ? 0.85 : 1.0;
    int h = k / 2;
    std::vector<double> w(k);
    for (int j = -h; j <= h; ++j)
        w[j + h] = std::exp(-0.5 * j * j / (sigma * sigma));
    Fingerprint out;
    out.s.resize(fp.size());
    auto n = static_cast<long>(fp.size());
    for (long i = 0; i < n; ++i) {
        double re = 0, im = 0, wsum = 0;
        for (int j = -h; j <= h; ++j) {
            long t = i + j;
            if (t < 0 || t >= n) continue;  // truncate at the edges
            re += w[j + h] * fp.s[t].real();
            im += w[j + h] * fp.s[t].imag();
            wsum += w[j + h];
        }
        out.s[i] = {re / wsum, im / wsum};
    }
    return out;
}

double estimate_pd(const Fingerprint& acquired, const Fingerprint& matched_ideal) {
    check_same_length(acquired, matched_ideal, "estimate_pd");
    double ni = norm2(matched_ideal);
    if (ni == 0) throw std::invalid_argument("estimate_pd: zero ideal fingerprint");
    return norm2(acquired) / ni;
}

void save_csv(const Fingerprint& fp, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path.string());
    f << "idx,re,im\n";
    for (std::size_t j = 0; j < fp.size(); ++j)
        f << j << ',' << fmt_g9(fp.s[j].real()) << ',' << fmt_g9(fp.s[j].imag()) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

Fingerprint load_fingerprint_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open fingerprint: " + path.string());
    std::string line;
    if (!std::getline(f, line) ||
        split_csv_line(line) != std::vector<std::string>{"idx", "re", "im"})
        throw std::runtime_error("bad fingerprint header in " + path.string());
    Fingerprint fp;
    std::size_t expect = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cols = split_csv_line(line);
        if (cols.size() != 3)
            throw std::runtime_error("bad fingerprint row in " + path.string());
        if (static_cast<std::size_t>(parse_double(cols[0])) != expect)
            throw std::runtime_error("non-sequential idx in " + path.string());
        fp.s.emplace_back(parse_double(cols[1]), parse_double(cols[2]));
        ++expect;
    }
    if (fp.size() == 0) throw std::runtime_error("empty fingerprint: " + path.string());
    return fp;
}

}  // namespace mrf
