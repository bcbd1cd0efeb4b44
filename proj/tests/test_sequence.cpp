#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mrf/dictionary.hpp"
#include "mrf/sequence.hpp"
#include "mrf/util.hpp"

using namespace mrf;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    fs::path p = fs::temp_directory_path() / "mrf_seq_tests";
    fs::create_directories(p);
    return p / name;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= a.size();
    mb /= b.size();
    double num = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return num / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("flip angles span exactly 0 to 79 degrees and vary smoothly") {
    auto flips = perlin_flips(500, 1);
    REQUIRE(flips.size() == 500);
    double lo = flips[0], hi = flips[0], max_step = 0;
    for (std::size_t i = 0; i < flips.size(); ++i) {
        lo = std::min(lo, flips[i]);
        hi = std::max(hi, flips[i]);
        if (i) max_step = std::max(max_step, std::abs(flips[i] - flips[i - 1]));
    }
    double deg = 180.0 / M_PI;
    CHECK(lo * deg == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hi * deg == doctest::Approx(79.0).epsilon(1e-12));
    // Value noise at 1/16 stride cannot jump; the train stays smooth.
    CHECK(max_step * deg < 15.0);
}

TEST_CASE("different seeds give decorrelated flip trains") {
    auto a = perlin_flips(500, 1);
    auto b = perlin_flips(500, 2);
    CHECK(std::abs(correlation(a, b)) < 0.5);
    // Same seed reproduces bit-identically.
    auto a2 = perlin_flips(500, 1);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == a2[i]);
}

TEST_CASE("phases cycle 0, 90, 180, 90 degrees") {
    auto ph = phase_pattern(9);
    double deg = 180.0 / M_PI;
    std::vector<double> want{0, 90, 180, 90, 0, 90, 180, 90, 0};
    REQUIRE(ph.size() == 9);
    for (std::size_t i = 0; i < ph.size(); ++i)
        CHECK(ph[i] * deg == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("repetition times sit on a 14 ms floor with a 6 ms spread") {
    auto trs = tr_pattern(500, 1);
    double lo = trs[0], hi = trs[0], mean = 0;
    for (double t : trs) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        mean += t;
    }
    mean /= trs.size();
    CHECK(lo == doctest::Approx(14e-3).epsilon(1e-12));
    CHECK(hi == doctest::Approx(20e-3).epsilon(1e-12));
    CHECK(mean > 16e-3);
    CHECK(mean < 18e-3);
}

TEST_CASE("assembled schedule is canonical and self-consistent") {
    Schedule s = build_schedule(500, 1);
    REQUIRE(s.size() == 500);
    CHECK(s.seed == 1);
    for (const auto& e : s.entries) {
        CHECK(e.te_ms == doctest::Approx(e.tr_ms / 2).epsilon(1e-8));
        CHECK(e.flip_deg >= 0.0);
        CHECK(e.flip_deg <= 79.0);
        // Stored values are already in canonical 9-significant-digit form.
        CHECK(e.flip_deg == quantize9(e.flip_deg));
        CHECK(e.tr_ms == quantize9(e.tr_ms));
        CHECK(e.te_ms == quantize9(e.te_ms));
    }
    std::set<double> phases;
    for (const auto& e : s.entries) phases.insert(e.phase_deg);
    CHECK(phases == std::set<double>{0.0, 90.0, 180.0});
}

TEST_CASE("schedule CSV round-trips bit-exactly and keeps its digest") {
    Schedule s = build_schedule(137, 5);
    fs::path p = temp_file("roundtrip.csv");
    save_csv(s, p);
    Schedule r = load_schedule_csv(p);
    REQUIRE(r.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(r.entries[i].flip_deg == s.entries[i].flip_deg);
        CHECK(r.entries[i].phase_deg == s.entries[i].phase_deg);
        CHECK(r.entries[i].tr_ms == s.entries[i].tr_ms);
        CHECK(r.entries[i].te_ms == s.entries[i].te_ms);
    }
    CHECK(to_csv(r) == to_csv(s));
    CHECK(schedule_digest(r) == schedule_digest(s));
    // Different schedules get different digests.
    CHECK(schedule_digest(build_schedule(137, 6)) != schedule_digest(s));
    fs::remove(p);
}

TEST_CASE("schedule loader rejects malformed files") {
    auto write = [](const fs::path& p, const std::string& body) {
        std::ofstream out(p, std::ios::binary);
        out << body;
    };
    fs::path p = temp_file("bad.csv");

    write(p, "idx,flip,phase,tr,te\n0,10,0,16,8\n");
    CHECK_THROWS(load_schedule_csv(p));

    write(p, "idx,flip_deg,phase_deg,tr_ms,te_ms\n1,10,0,16,8\n");
    CHECK_THROWS(load_schedule_csv(p));  // indices must start at 0

    write(p, "idx,flip_deg,phase_deg,tr_ms,te_ms\n0,10,0,16,8\n2,10,0,16,8\n");
    CHECK_THROWS(load_schedule_csv(p));  // and be sequential

    write(p, "idx,flip_deg,phase_deg,tr_ms,te_ms\n0,10,0,16,9x\n");
    CHECK_THROWS(load_schedule_csv(p));  // numbers must parse fully

    write(p, "idx,flip_deg,phase_deg,tr_ms,te_ms\n0,10,0,16,17\n");
    CHECK_THROWS(load_schedule_csv(p));  // echo cannot come after the repetition

    CHECK_THROWS(load_schedule_csv(temp_file("missing.csv")));
    fs::remove(p);
}
