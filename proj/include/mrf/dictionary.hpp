#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "mrf/bloch.hpp"
#include "mrf/fingerprint.hpp"
#include "mrf/sequence.hpp"

namespace mrf {

// One lattice axis: values min + k*step for k in [0, count).
struct AxisSpec {
    double min = 0;
    double step = 1;
    std::size_t count = 0;

    double value(std::size_t k) const { return min + static_cast<double>(k) * step; }
};

// Half-open range [min, max) discretized at `step`.
struct AxisRange {
    double min = 0;
    double max = 0;
    double step = 1;
};

// Cartesian T1 x T2 x df lattice. T1 is the outer axis, df the innermost,
// and flat indices follow that nesting.
struct ParameterGrid {
    AxisSpec t1_ms, t2_ms, df_hz;

    std::size_t total() const { return t1_ms.count * t2_ms.count * df_hz.count; }

    std::size_t flatten(std::size_t i1, std::size_t i2, std::size_t idf) const {
        return (i1 * t2_ms.count + i2) * df_hz.count + idf;
    }

    struct Index3 {
        std::size_t i1, i2, idf;
    };

    Index3 unflatten(std::size_t flat) const {
        std::size_t idf = flat % df_hz.count;
        std::size_t rest = flat / df_hz.count;
        return {rest / t2_ms.count, rest % t2_ms.count, idf};
    }

    TissueParams params_at(std::size_t i1, std::size_t i2, std::size_t idf) const {
        return {t1_ms.value(i1) * 1e-3, t2_ms.value(i2) * 1e-3, df_hz.value(idf), 1.0};
    }
};

// Endpoint-exclusive discretization: count = floor((max-min)/step), with a
// relative-epsilon guard so an exactly representable integer quotient never
// loses its last point to rounding dust.
ParameterGrid grid_from_ranges(const AxisRange& t1_ms, const AxisRange& t2_ms,
                               const AxisRange& df_hz);

using Digest = std::array<std::uint8_t, 32>;

// SHA-256 of the canonical schedule CSV bytes.
Digest schedule_digest(const Schedule& sched);
std::string digest_hex(const Digest& d);

// Materialized dictionary: unit-norm fingerprints quantized to interleaved
// (re, im) float32, stored in grid flattening order.
struct Dictionary {
    ParameterGrid grid;
    Digest digest{};
    std::size_t entry_len = 0;
    std::vector<float> data;

    std::span<const float> entry(std::size_t flat) const {
        return {data.data() + flat * 2 * entry_len, 2 * entry_len};
    }
};

// Simulate every lattice point. Workers split the T1-major entry range into
// contiguous blocks, so the result is byte-identical for any worker count.
Dictionary generate(const ParameterGrid& grid, const Schedule& sched, int workers = 1);

// Binary layout (little-endian): magic "MRFD", u32 version, 32-byte schedule
// digest, three axes as (f64 min, f64 step, u64 count), u64 entry length,
// then float32 interleaved (re, im) payload in flattening order.
void save(const Dictionary& dict, const std::filesystem::path& path);
Dictionary load(const std::filesystem::path& path);

// Stream a dictionary straight to disk in bounded memory.
void save_generated(const ParameterGrid& grid, const Schedule& sched,
                    const std::filesystem::path& path, int workers = 1,
                    std::size_t chunk_entries = 1 << 15);

enum class Metric { cc, euclidean };

struct Match {
    TissueParams params;
    double score = 0;        // correlation, or negated distance
    std::size_t evaluations = 0;
};

// Exhaustive scan. The query is normalized once; ties keep the lowest flat
// index. Distances also compare against the stored unit-norm entries.
Match brute_force_search(const Fingerprint& fp, const Dictionary& dict,
                         Metric metric = Metric::cc);

// Exhaustive scan of a grid too large to materialize: entries are generated
// in chunks (generation untimed), then every query is scanned against the
// chunk with the stopwatch running. Results are bit-identical to
// brute_force_search over generate() of the same grid.
struct ScanOutcome {
    std::vector<Match> matches;       // one per query
    std::vector<double> scan_seconds; // timed scan per query
    double generate_seconds = 0;      // untimed bookkeeping
};
ScanOutcome scan_grid(const ParameterGrid& grid, const Schedule& sched,
                      const std::vector<Fingerprint>& queries, Metric metric = Metric::cc,
                      int workers = 1, std::size_t chunk_entries = 1 << 15);

// Correlation of one fingerprint against every lattice point, streamed to a
// sink in flattening order. File variant writes magic "MRFC" with the same
// header discipline and a float32 score payload.
void cc_map(const Fingerprint& fp, const ParameterGrid& grid, const Schedule& sched,
            const std::function<void(std::size_t first_flat, std::span<const float>)>& sink,
            int workers = 1, std::size_t chunk_entries = 1 << 15);
void cc_map_to_file(const Fingerprint& fp, const ParameterGrid& grid,
                    const Schedule& sched, const std::filesystem::path& path,
                    int workers = 1);

}  // namespace mrf
