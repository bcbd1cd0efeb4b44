#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mrf {

// One excitation of the acquisition schedule. Values are stored in display
// units (degrees, milliseconds) pre-quantized to their 9-significant-digit
// CSV form, so writing and re-reading a schedule is bit-exact. Accessors
// convert to SI for the physics.
struct ScheduleEntry {
    double flip_deg = 0;
    double phase_deg = 0;
    double tr_ms = 0;
    double te_ms = 0;

    double flip_rad() const { return flip_deg * 0.017453292519943295; }
    double phase_rad() const { return phase_deg * 0.017453292519943295; }
    double tr_s() const { return tr_ms * 1e-3; }
    double te_s() const { return te_ms * 1e-3; }
};

struct Schedule {
    std::vector<ScheduleEntry> entries;
    std::uint64_t seed = 0;

    std::size_t size() const { return entries.size(); }
};

// Flip angles in radians from one-dimensional Perlin value noise sampled at
// stride 1/16 per timepoint, rescaled affinely so the series minimum maps to
// 0 and the maximum to 79 degrees. A constant raw series collapses to all
// zeros.
std::vector<double> perlin_flips(std::size_t n, std::uint64_t seed);

// RF phases in radians cycling 0, 90, 180, 90 degrees with period 4.
std::vector<double> phase_pattern(std::size_t n);

// Repetition times in seconds: standard-normal draws remapped affinely so
// the series minimum maps to 0 ms and the maximum to 6 ms, plus a 14 ms
// floor. Echo time is taken as TR/2 when the schedule is assembled.
std::vector<double> tr_pattern(std::size_t n, std::uint64_t seed);

// Assemble and canonicalize the full schedule for n excitations.
Schedule build_schedule(std::size_t n, std::uint64_t seed);

// Canonical CSV bytes: header "idx,flip_deg,phase_deg,tr_ms,te_ms" then one
// row per entry with %.9g fields and \n line ends. This string is also the
// digest input for dictionary/schedule pairing.
std::string to_csv(const Schedule& sched);

void save_csv(const Schedule& sched, const std::filesystem::path& path);
Schedule load_schedule_csv(const std::filesystem::path& path);

}  // namespace mrf
