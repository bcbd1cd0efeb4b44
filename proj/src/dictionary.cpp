#include "mrf/dictionary.hpp"

#include <openssl/evp.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mrf/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "dictionary file format assumes a little-endian host");

namespace mrf {

namespace {

constexpr char kDictMagic[4] = {'M', 'R', 'F', 'D'};
constexpr char kMapMagic[4] = {'M', 'R', 'F', 'C'};
constexpr std::uint32_t kVersion = 1;

std::size_t axis_count(const AxisRange& r, const char* name) {
    if (!(r.step > 0)) throw std::invalid_argument(std::string(name) + ": step must be > 0");
    if (!(r.max > r.min))
        throw std::invalid_argument(std::string(name) + ": need max > min");
    double q = (r.max - r.min) / r.step;
    auto count = static_cast<std::size_t>(std::floor(q + q * 1e-12 + 1e-12));
    if (count < 1) throw std::invalid_argument(std::string(name) + ": empty axis");
    return count;
}

// Simulate the flat index range [begin, end) and store unit-norm float32
// entries into out (relative to begin).
void generate_block(const ParameterGrid& grid, const BlochSimulator& sim,
                    std::size_t begin, std::size_t end, float* out) {
    std::size_t len = sim.length();
    std::vector<std::complex<double>> buf(len);
    for (std::size_t flat = begin; flat < end; ++flat) {
        auto [i1, i2, idf] = grid.unflatten(flat);
        sim.simulate(grid.params_at(i1, i2, idf), buf.data());
        double acc = 0;
        for (const auto& v : buf) acc += v.real() * v.real() + v.imag() * v.imag();
        double inv = 1.0 / std::sqrt(acc);
        float* dst = out + (flat - begin) * 2 * len;
        for (std::size_t j = 0; j < len; ++j) {
            dst[2 * j] = static_cast<float>(buf[j].real() * inv);
            dst[2 * j + 1] = static_cast<float>(buf[j].imag() * inv);
        }
    }
}

void generate_range(const ParameterGrid& grid, const BlochSimulator& sim,
                    std::size_t begin, std::size_t end, float* out, int workers) {
    parallel_blocks(end - begin, workers, [&](std::size_t b, std::size_t e) {
        generate_block(grid, sim, begin + b, begin + e, out + b * 2 * sim.length());
    });
}

template <typename T>
void put(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void get(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_header(std::ofstream& f, const char magic[4], const Digest& digest,
                  const ParameterGrid& grid, std::uint64_t entry_len) {
    f.write(magic, 4);
    put(f, kVersion);
    f.write(reinterpret_cast<const char*>(digest.data()), digest.size());
    for (const AxisSpec* ax : {&grid.t1_ms, &grid.t2_ms, &grid.df_hz}) {
        put(f, ax->min);
        put(f, ax->step);
        put(f, static_cast<std::uint64_t>(ax->count));
    }
    put(f, entry_len);
}

struct Header {
    Digest digest;
    ParameterGrid grid;
    std::uint64_t entry_len;
};

Header read_header(std::ifstream& f, const char magic[4], const std::string& path) {
    char m[4];
    f.read(m, 4);
    if (!f || std::memcmp(m, magic, 4) != 0)
        throw std::runtime_error("bad magic in " + path);
    std::uint32_t version = 0;
    get(f, version);
    if (!f || version != kVersion)
        throw std::runtime_error("unsupported version in " + path);
    Header h{};
    f.read(reinterpret_cast<char*>(h.digest.data()), h.digest.size());
    for (AxisSpec* ax : {&h.grid.t1_ms, &h.grid.t2_ms, &h.grid.df_hz}) {
        std::uint64_t count = 0;
        get(f, ax->min);
        get(f, ax->step);
        get(f, count);
        ax->count = count;
    }
    get(f, h.entry_len);
    if (!f) throw std::runtime_error("truncated header in " + path);
    if (h.grid.total() == 0 || h.entry_len == 0)
        throw std::runtime_error("degenerate dimensions in " + path);
    return h;
}

// Correlation of a unit-norm double query against one unit-norm float entry.
inline double cc_against_entry(const std::vector<std::complex<double>>& q,
                               const float* e) {
    double re = 0, im = 0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        double er = e[2 * j], ei = e[2 * j + 1];
        re += q[j].real() * er + q[j].imag() * ei;
        im += q[j].imag() * er - q[j].real() * ei;
    }
    double v = std::sqrt(re * re + im * im);
    return v < 1.0 ? v : 1.0;  // float quantization can graze past one
}

inline double dist_against_entry(const std::vector<std::complex<double>>& q,
                                 const float* e) {
    double acc = 0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        double dr = q[j].real() - e[2 * j];
        double di = q[j].imag() - e[2 * j + 1];
        acc += dr * dr + di * di;
    }
    return std::sqrt(acc);
}

inline double score_entry(const std::vector<std::complex<double>>& q, const float* e,
                          Metric metric) {
    return metric == Metric::cc ? cc_against_entry(q, e) : -dist_against_entry(q, e);
}

std::vector<std::complex<double>> prep_query(const Fingerprint& fp, std::size_t len) {
    if (fp.size() != len)
        throw std::invalid_argument("query length does not match dictionary entries");
    Fingerprint n = fp.unit_norm ? fp : normalize(fp);
    return std::move(n.s);
}

}  // namespace

ParameterGrid grid_from_ranges(const AxisRange& t1_ms, const AxisRange& t2_ms,
                               const AxisRange& df_hz) {
    ParameterGrid g;
    g.t1_ms = {t1_ms.min, t1_ms.step, axis_count(t1_ms, "t1")};
    g.t2_ms = {t2_ms.min, t2_ms.step, axis_count(t2_ms, "t2")};
    g.df_hz = {df_hz.min, df_hz.step, axis_count(df_hz, "df")};
    return g;
}

Digest schedule_digest(const Schedule& sched) {
    std::string csv = to_csv(sched);
    Digest d{};
    unsigned int n = 0;
    if (EVP_Digest(csv.data(), csv.size(), d.data(), &n, EVP_sha256(), nullptr) != 1 ||
        n != d.size())
        throw std::runtime_error("SHA-256 digest failed");
    return d;
}

std::string digest_hex(const Digest& d) {
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : d) {
        s += hex[b >> 4];
        s += hex[b & 0xF];
    }
    return s;
}

Dictionary generate(const ParameterGrid& grid, const Schedule& sched, int workers) {
    if (sched.size() == 0) throw std::invalid_argument("generate: empty schedule");
    BlochSimulator sim(sched);
    Dictionary d;
    d.grid = grid;
    d.digest = schedule_digest(sched);
    d.entry_len = sim.length();
    d.data.resize(grid.total() * 2 * d.entry_len);
    generate_range(grid, sim, 0, grid.total(), d.data.data(), workers);
    return d;
}

void save(const Dictionary& dict, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path.string());
    write_header(f, kDictMagic, dict.digest, dict.grid, dict.entry_len);
    f.write(reinterpret_cast<const char*>(dict.data.data()),
            static_cast<std::streamsize>(dict.data.size() * sizeof(float)));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

Dictionary load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open dictionary: " + path.string());
    Header h = read_header(f, kDictMagic, path.string());
    Dictionary d;
    d.grid = h.grid;
    d.digest = h.digest;
    d.entry_len = h.entry_len;
    d.data.resize(d.grid.total() * 2 * d.entry_len);
    f.read(reinterpret_cast<char*>(d.data.data()),
           static_cast<std::streamsize>(d.data.size() * sizeof(float)));
    if (f.gcount() != static_cast<std::streamsize>(d.data.size() * sizeof(float)))
        throw std::runtime_error("truncated payload in " + path.string());
    return d;
}

void save_generated(const ParameterGrid& grid, const Schedule& sched,
                    const std::filesystem::path& path, int workers,
                    std::size_t chunk_entries) {
    if (chunk_entries == 0) throw std::invalid_argument("chunk_entries must be > 0");
    BlochSimulator sim(sched);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path.string());
    write_header(f, kDictMagic, schedule_digest(sched), grid, sim.length());
    std::vector<float> buf;
    std::size_t total = grid.total();
    for (std::size_t begin = 0; begin < total; begin += chunk_entries) {
        std::size_t end = std::min(total, begin + chunk_entries);
        buf.resize((end - begin) * 2 * sim.length());
        generate_range(grid, sim, begin, end, buf.data(), workers);
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

Match brute_force_search(const Fingerprint& fp, const Dictionary& dict, Metric metric) {
    auto q = prep_query(fp, dict.entry_len);
    double best = -1e300;
    std::size_t best_flat = 0;
    std::size_t total = dict.grid.total();
    for (std::size_t flat = 0; flat < total; ++flat) {
        double s = score_entry(q, dict.data.data() + flat * 2 * dict.entry_len, metric);
        if (s > best) {
            best = s;
            best_flat = flat;
        }
    }
    auto [i1, i2, idf] = dict.grid.unflatten(best_flat);
    return {dict.grid.params_at(i1, i2, idf), best, total};
}

ScanOutcome scan_grid(const ParameterGrid& grid, const Schedule& sched,
                      const std::vector<Fingerprint>& queries, Metric metric,
                      int workers, std::size_t chunk_entries) {
    if (queries.empty()) throw std::invalid_argument("scan_grid: no queries");
    if (chunk_entries == 0) throw std::invalid_argument("chunk_entries must be > 0");
    BlochSimulator sim(sched);
    std::vector<std::vector<std::complex<double>>> qs;
    qs.reserve(queries.size());
    for (const auto& fp : queries) qs.push_back(prep_query(fp, sim.length()));

    std::vector<double> best(queries.size(), -1e300);
    std::vector<std::size_t> best_flat(queries.size(), 0);
    ScanOutcome out;
    out.scan_seconds.assign(queries.size(), 0.0);

    using clock = std::chrono::steady_clock;
    std::vector<float> buf;
    std::size_t total = grid.total();
    auto g0 = clock::now();
    for (std::size_t begin = 0; begin < total; begin += chunk_entries) {
        std::size_t end = std::min(total, begin + chunk_entries);
        buf.resize((end - begin) * 2 * sim.length());
        auto t0 = clock::now();
        generate_range(grid, sim, begin, end, buf.data(), workers);
        auto t1 = clock::now();
        out.generate_seconds += std::chrono::duration<double>(t1 - t0).count();
        for (std::size_t iq = 0; iq < qs.size(); ++iq) {
            auto s0 = clock::now();
            double b = best[iq];
            std::size_t bf = best_flat[iq];
            for (std::size_t flat = begin; flat < end; ++flat) {
                double s = score_entry(
                    qs[iq], buf.data() + (flat - begin) * 2 * sim.length(), metric);
                if (s > b) {
                    b = s;
                    bf = flat;
                }
            }
            best[iq] = b;
            best_flat[iq] = bf;
            auto s1 = clock::now();
            out.scan_seconds[iq] += std::chrono::duration<double>(s1 - s0).count();
        }
    }
    (void)g0;
    out.matches.reserve(queries.size());
    for (std::size_t iq = 0; iq < qs.size(); ++iq) {
        auto [i1, i2, idf] = grid.unflatten(best_flat[iq]);
        out.matches.push_back({grid.params_at(i1, i2, idf), best[iq], total});
    }
    return out;
}

void cc_map(const Fingerprint& fp, const ParameterGrid& grid, const Schedule& sched,
            const std::function<void(std::size_t, std::span<const float>)>& sink,
            int workers, std::size_t chunk_entries) {
    if (chunk_entries == 0) throw std::invalid_argument("chunk_entries must be > 0");
    BlochSimulator sim(sched);
    auto q = prep_query(fp, sim.length());
    std::vector<float> buf;
    std::vector<float> scores;
    std::size_t total = grid.total();
    for (std::size_t begin = 0; begin < total; begin += chunk_entries) {
        std::size_t end = std::min(total, begin + chunk_entries);
        buf.resize((end - begin) * 2 * sim.length());
        generate_range(grid, sim, begin, end, buf.data(), workers);
        scores.resize(end - begin);
        parallel_blocks(end - begin, workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k)
                scores[k] = static_cast<float>(
                    cc_against_entry(q, buf.data() + k * 2 * sim.length()));
        });
        sink(begin, {scores.data(), scores.size()});
    }
}

void cc_map_to_file(const Fingerprint& fp, const ParameterGrid& grid,
                    const Schedule& sched, const std::filesystem::path& path,
                    int workers) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path.string());
    write_header(f, kMapMagic, schedule_digest(sched), grid, sched.size());
    cc_map(
        fp, grid, sched,
        [&](std::size_t, std::span<const float> scores) {
            f.write(reinterpret_cast<const char*>(scores.data()),
                    static_cast<std::streamsize>(scores.size() * sizeof(float)));
        },
        workers);
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace mrf
