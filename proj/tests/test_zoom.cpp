#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mrf/rng.hpp"
#include "mrf/zoom.hpp"

using namespace mrf;

namespace {

using Probe1 = std::vector<long>;
using Probe2 = std::vector<std::pair<long, long>>;

// Triangular needle of half-width 2: h at p, zero beyond |x-p| >= 2.
double needle(long x, long p, double h) {
    double d = std::abs(static_cast<double>(x - p));
    return d >= 2.0 ? 0.0 : h * (1.0 - d / 2.0);
}

long argmax_range(const std::function<double(long)>& f, long lo, long hi) {
    long best = lo;
    double bv = f(lo);
    for (long x = lo + 1; x <= hi; ++x) {
        double v = f(x);
        if (v > bv) {
            bv = v;
            best = x;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("1-D zoom: left flank first, winner taken without probing right") {
    Probe1 seen;
    auto f = [&](long x) {
        seen.push_back(x);
        return -std::abs(static_cast<double>(x - 7));
    };
    std::vector<long> steps{4, 1};
    long r = zoom_1d(f, 0, 20, 10, steps);
    CHECK(r == 7);
    CHECK(seen == Probe1{10, 6, 2, 10, 5, 7, 6, 8});
}

TEST_CASE("1-D zoom: ties keep the center") {
    Probe1 seen;
    auto f = [&](long x) {
        seen.push_back(x);
        return 1.0;
    };
    std::vector<long> steps{4, 1};
    CHECK(zoom_1d(f, 0, 10, 5, steps) == 5);
    CHECK(seen == Probe1{5, 1, 9, 4, 6});
}

TEST_CASE("1-D zoom clamps candidates and the start point") {
    std::vector<long> steps{1};
    CHECK(zoom_1d([](long x) { return static_cast<double>(x); }, 0, 10, 99, steps) == 10);
    CHECK(zoom_1d([](long x) { return static_cast<double>(-x); }, 3, 10, -5, steps) == 3);
}

TEST_CASE("1-D zoom finds the peak of unimodal lattices") {
    std::vector<long> steps{7, 3, 1};
    for (int k = 0; k < 20; ++k) {
        long p = static_cast<long>(rng::at(90, 0, k) % 101);
        long init = static_cast<long>(rng::at(90, 1, k) % 101);
        auto f = [&](long x) {
            double d = static_cast<double>(x - p);
            return -d * d;
        };
        CHECK(zoom_1d(f, 0, 100, init, steps) == p);
    }
}

TEST_CASE("1-D zoom validates its inputs") {
    std::vector<long> good{1};
    std::vector<long> bad{0};
    CHECK_THROWS(zoom_1d([](long) { return 0.0; }, 5, 4, 5, good));
    CHECK_THROWS(zoom_1d([](long) { return 0.0; }, 0, 4, 2, bad));
}

TEST_CASE("2-D zoom: both flanks winning takes the diagonal corner") {
    Probe2 seen;
    auto f = [&](long x, long y) {
        seen.push_back({x, y});
        return -static_cast<double>(x + y);
    };
    std::vector<std::pair<long, long>> steps{{1, 1}};
    auto r = zoom_2d(f, 0, 10, 0, 10, 5, 5, steps);
    CHECK(r == std::pair<long, long>{0, 0});
    REQUIRE(seen.size() == 18);  // 1 entry + 5 corner hops x3 + 2 final probes
    CHECK(seen[0] == std::pair<long, long>{5, 5});
    CHECK(seen[1] == std::pair<long, long>{4, 5});
    CHECK(seen[2] == std::pair<long, long>{5, 4});
    CHECK(seen[3] == std::pair<long, long>{4, 4});
}

TEST_CASE("2-D zoom: both flanks losing probes right and up") {
    Probe2 seen;
    auto f = [&](long x, long y) {
        seen.push_back({x, y});
        return static_cast<double>(x + y);
    };
    std::vector<std::pair<long, long>> steps{{1, 1}};
    auto r = zoom_2d(f, 0, 10, 0, 10, 5, 5, steps);
    CHECK(r == std::pair<long, long>{10, 10});
    REQUIRE(seen.size() == 28);  // 1 + 5 hops x5 + 2 converge probes
    CHECK(seen[1] == std::pair<long, long>{4, 5});
    CHECK(seen[2] == std::pair<long, long>{5, 4});
    CHECK(seen[3] == std::pair<long, long>{6, 5});
    CHECK(seen[4] == std::pair<long, long>{5, 6});
    CHECK(seen[5] == std::pair<long, long>{6, 6});
}

TEST_CASE("2-D zoom: a lone winning flank is taken without a fresh evaluation") {
    Probe2 seen;
    auto f = [&](long x, long y) {
        seen.push_back({x, y});
        return static_cast<double>(x);  // flat in y
    };
    std::vector<std::pair<long, long>> steps{{1, 1}};
    auto r = zoom_2d(f, 0, 10, 0, 10, 5, 5, steps);
    CHECK(r == std::pair<long, long>{10, 5});
    CHECK(seen.size() == 24);  // 1 + 5 iterations x4 + 3 converge probes
}

TEST_CASE("2-D zoom: left winning with down losing arbitrates via up") {
    Probe2 seen;
    auto f = [&](long x, long y) {
        seen.push_back({x, y});
        return static_cast<double>(-x);  // flat in y
    };
    std::vector<std::pair<long, long>> steps{{1, 1}};
    auto r = zoom_2d(f, 0, 10, 0, 10, 5, 5, steps);
    CHECK(r == std::pair<long, long>{0, 5});
    REQUIRE(seen.size() == 19);  // 1 + 5 x (L, D, U) + 3 converge probes
    CHECK(seen[1] == std::pair<long, long>{4, 5});
    CHECK(seen[2] == std::pair<long, long>{5, 4});
    CHECK(seen[3] == std::pair<long, long>{5, 6});
    CHECK(seen[4] == std::pair<long, long>{3, 5});  // next iteration from (4,5)
}

TEST_CASE("2-D zoom: opposing corners are reachable") {
    std::vector<std::pair<long, long>> steps{{1, 1}};
    // Down + right winning jumps to the down-right corner.
    auto dr = zoom_2d([](long x, long y) { return static_cast<double>(x - y); }, 0, 10, 0,
                      10, 5, 5, steps);
    CHECK(dr == std::pair<long, long>{10, 0});
    // Left + up winning jumps to the up-left corner.
    auto ul = zoom_2d([](long x, long y) { return static_cast<double>(y - x); }, 0, 10, 0,
                      10, 5, 5, steps);
    CHECK(ul == std::pair<long, long>{0, 10});
    // Pure down movement.
    auto dn = zoom_2d([](long x, long y) { return static_cast<double>(-y); }, 0, 10, 0, 10,
                      5, 5, steps);
    CHECK(dn == std::pair<long, long>{5, 0});
}

TEST_CASE("2-D zoom: the iteration cap settles a cycling objective on the best seen") {
    auto f = [](long x, long y) { return (x + y) % 2 ? 1.0 : 0.0; };
    std::vector<std::pair<long, long>> steps{{1, 1}};
    auto r = zoom_2d(f, 0, 10, 0, 10, 5, 5, steps);
    CHECK(f(r.first, r.second) == 1.0);
    CHECK(r == std::pair<long, long>{4, 5});  // first strictly better point seen
}

TEST_CASE("2-D zoom finds separable concave peaks through the step schedule") {
    std::vector<std::pair<long, long>> steps{{5, 5}, {2, 2}, {1, 1}};
    for (int k = 0; k < 15; ++k) {
        long p = static_cast<long>(rng::at(91, 0, k) % 41);
        long q = static_cast<long>(rng::at(91, 1, k) % 41);
        double a = 0.5 + rng::uniform01(91, 2, k);
        double b = 0.5 + rng::uniform01(91, 3, k);
        long ix = static_cast<long>(rng::at(91, 4, k) % 41);
        long iy = static_cast<long>(rng::at(91, 5, k) % 41);
        auto f = [&](long x, long y) {
            double dx = static_cast<double>(x - p), dy = static_cast<double>(y - q);
            return -a * dx * dx - b * dy * dy;
        };
        CHECK(zoom_2d(f, 0, 40, 0, 40, ix, iy, steps) == std::pair<long, long>{p, q});
    }
    CHECK_THROWS(zoom_2d([](long, long) { return 0.0; }, 5, 4, 0, 10, 0, 0, steps));
    std::vector<std::pair<long, long>> bad{{0, 1}};
    CHECK_THROWS(zoom_2d([](long, long) { return 0.0; }, 0, 10, 0, 10, 0, 0, bad));
}

TEST_CASE("off-resonance search: translation rescue recovers the global needle") {
    // Needles every 35 units around 107, taller toward the center; the
    // coarse scan sees only zeros, the refine window catches a side needle,
    // and the periodic translation must walk to the global one.
    auto f = [](long x) {
        double best = 0;
        for (long k = -3; k <= 4; ++k) {
            long p = 107 + 35 * k;
            if (p < 0 || p > 239) continue;
            best = std::max(best, needle(x, p, 1.0 - 0.08 * std::abs(k)));
        }
        return best;
    };
    DfSearchParams prm;
    prm.coarse = 30;
    prm.refine = 3;
    prm.finest = 1;
    prm.window_half = 37;
    prm.omega = 35;
    std::vector<std::string> stages;
    long r = search_df(f, 0, 239, prm, [&](const char* s, long, double) { stages.push_back(s); });
    CHECK(r == 107);
    CHECK(r == argmax_range(f, 0, 239));
    CHECK(stages == std::vector<std::string>{"df.coarse", "df.refine", "df.translate",
                                             "df.rerefine", "df.translate", "df.finest"});
}

TEST_CASE("off-resonance search: stagnating refinements stop early") {
    // Equal-height needles; one translation hop lands on a needle higher by
    // only 1e-8, so three successive stage bests agree to 1e-7 and the
    // finest sweep is skipped.
    auto f = [](long x) {
        return std::max({needle(x, 50, 0.8), needle(x, 85, 0.80000001), needle(x, 120, 0.8)});
    };
    DfSearchParams prm;
    prm.coarse = 30;
    prm.refine = 3;
    prm.finest = 1;
    prm.window_half = 37;
    prm.omega = 35;
    std::vector<std::string> stages;
    long r = search_df(f, 0, 239, prm, [&](const char* s, long, double) { stages.push_back(s); });
    CHECK(r == 85);
    REQUIRE(!stages.empty());
    CHECK(stages.back() == "df.plateau_stop");
    CHECK(std::find(stages.begin(), stages.end(), "df.finest") == stages.end());
}

TEST_CASE("off-resonance search: heavy-noise fallback rescans coarser and wider") {
    // A single faint needle invisible to the default coarse scan; the best
    // stays below the heavy-noise threshold, so the fallback (step 30, full
    // window) must find it.
    auto f = [](long x) { return needle(x, 90, 0.09); };
    DfSearchParams prm;  // defaults: coarse 60, window 75, omega 70
    prm.omega = 35;
    std::vector<std::string> stages;
    long r = search_df(f, 0, 239, prm, [&](const char* s, long, double) { stages.push_back(s); });
    CHECK(r == 90);
    CHECK(std::find(stages.begin(), stages.end(), "df.fallback") != stages.end());

    prm.allow_fallback = false;
    CHECK(search_df(f, 0, 239, prm) != 90);
}

TEST_CASE("off-resonance search validates its inputs") {
    auto f = [](long) { return 0.0; };
    DfSearchParams prm;
    CHECK_THROWS(search_df(f, 10, 9, prm));
    prm.coarse = 0;
    CHECK_THROWS(search_df(f, 0, 10, prm));
}

TEST_CASE("off-resonance search at lattice pitch equals the exhaustive scan") {
    Schedule sched = build_schedule(60, 13);
    auto grid = grid_from_ranges({1400, 1410, 10}, {500, 510, 10}, {-300, 300, 1});
    Fingerprint fp = simulate_fingerprint({1.4, 0.5, 100.0, 1.0}, sched);
    Objective obj(fp, grid, sched, {});
    auto f = [&](long idf) { return obj.eval(0, 0, idf, Metric::cc); };
    DfSearchParams prm;
    prm.coarse = 1;
    long got = search_df(f, 0, 599, prm);
    CHECK(got == argmax_range(f, 0, 599));
    CHECK(grid.df_hz.value(static_cast<std::size_t>(got)) == 100.0);
}

TEST_CASE("objective memoizes entries and counts only unique evaluations") {
    Schedule sched = build_schedule(40, 14);
    auto grid = grid_from_ranges({600, 800, 100}, {80, 120, 20}, {-10, 10, 10});
    Fingerprint fp = simulate_fingerprint({0.7, 0.1, 0.0, 1.0}, sched);
    Objective obj(fp, grid, sched, {});
    double a = obj.eval(0, 0, 1, Metric::cc);
    CHECK(obj.evaluations() == 1);
    CHECK(obj.eval(0, 0, 1, Metric::cc) == a);
    obj.eval(0, 0, 1, Metric::euclidean);  // metric switch reuses the entry
    CHECK(obj.evaluations() == 1);
    obj.eval(1, 1, 0, Metric::cc);
    CHECK(obj.evaluations() == 2);
    CHECK_THROWS(obj.eval(-1, 0, 0, Metric::cc));
    CHECK_THROWS(obj.eval(0, 0, 99, Metric::cc));

    Fingerprint short_fp;
    short_fp.s.assign(8, {1, 0});
    CHECK_THROWS(Objective(short_fp, grid, sched, {}));
}

namespace {

struct MiniSetup {
    Schedule sched = build_schedule(60, 15);
    SearchRanges ranges{{600, 1000, 10}, {80, 160, 5}, {-20, 30, 2}};
    ParameterGrid grid = grid_from_ranges(ranges.t1_ms, ranges.t2_ms, ranges.df_hz);
    ZoomConfig cfg;

    MiniSetup() { cfg.df_coarse_hz = ranges.df_hz.step; }

    TissueParams target(int k) const {
        return grid.params_at(rng::at(92, 0, k) % grid.t1_ms.count,
                              rng::at(92, 1, k) % grid.t2_ms.count,
                              rng::at(92, 2, k) % grid.df_hz.count);
    }
};

}  // namespace

TEST_CASE("quantify matches brute force on every parameter for lattice targets") {
    MiniSetup ms;
    Dictionary dict = generate(ms.grid, ms.sched);
    for (int k = 0; k < 5; ++k) {
        TissueParams t = ms.target(k);
        CAPTURE(t.t1);
        CAPTURE(t.t2);
        CAPTURE(t.df);
        Fingerprint fp = simulate_fingerprint(t, ms.sched);
        QuantResult q = quantify(fp, ms.ranges, ms.cfg, ms.sched);
        Match b = brute_force_search(fp, dict);
        CHECK(q.params.t1 == b.params.t1);
        CHECK(q.params.t2 == b.params.t2);
        CHECK(q.params.df == b.params.df);
        CHECK(q.params.pd == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(q.evaluations > 0);
        CHECK(q.evaluations < ms.grid.total());
        std::size_t traced = 0;
        for (const auto& s : q.trace) traced += s.evaluations;
        CHECK(traced == q.evaluations);

        ZoomConfig ce = ms.cfg;
        ce.final_metric = Metric::euclidean;
        QuantResult qe = quantify(fp, ms.ranges, ce, ms.sched);
        CHECK(qe.params.t1 == b.params.t1);
        CHECK(qe.params.t2 == b.params.t2);
        CHECK(qe.params.df == b.params.df);
    }
}

TEST_CASE("quantify is insensitive to the initial guess for clean targets") {
    MiniSetup ms;
    TissueParams t = ms.grid.params_at(10, 4, 20);
    Fingerprint fp = simulate_fingerprint(t, ms.sched);
    QuantResult base = quantify(fp, ms.ranges, ms.cfg, ms.sched);
    for (auto [t1i, t2i] : {std::pair{600.0, 80.0}, {800.0, 120.0}, {990.0, 155.0}}) {
        ZoomConfig c = ms.cfg;
        c.init_t1_ms = t1i;
        c.init_t2_ms = t2i;
        QuantResult q = quantify(fp, ms.ranges, c, ms.sched);
        CHECK(q.params.t1 == base.params.t1);
        CHECK(q.params.t2 == base.params.t2);
        CHECK(q.params.df == base.params.df);
    }
}

TEST_CASE("quantify recovers the proton-density scale") {
    MiniSetup ms;
    TissueParams t = ms.grid.params_at(25, 10, 7);
    Fingerprint fp = simulate_fingerprint(t, ms.sched);
    for (auto& v : fp.s) v *= 2.2;
    QuantResult q = quantify(fp, ms.ranges, ms.cfg, ms.sched);
    CHECK(q.params.t1 == t.t1);
    CHECK(q.params.pd == doctest::Approx(2.2).epsilon(1e-6));
}

TEST_CASE("smoothed matching still resolves lattice targets exactly") {
    MiniSetup ms;
    ms.cfg.smooth_k = 3;
    TissueParams t = ms.grid.params_at(30, 12, 11);
    Fingerprint fp = simulate_fingerprint(t, ms.sched);
    QuantResult q = quantify(fp, ms.ranges, ms.cfg, ms.sched);
    CHECK(q.params.t1 == t.t1);
    CHECK(q.params.t2 == t.t2);
    CHECK(q.params.df == t.df);
}

TEST_CASE("a prior off-resonance dictionary changes nothing but the lookups") {
    MiniSetup ms;
    ParameterGrid slab = grid_from_ranges({1000, 1010, 10}, {160, 165, 5}, {-20, 30, 2});
    // Initial guesses 1000/500 snap and clamp to lattice values 990/155;
    // match the slab to those.
    ParameterGrid slab_ok = grid_from_ranges({990, 1000, 10}, {155, 160, 5}, {-20, 30, 2});
    Dictionary df_dict = generate(slab_ok, ms.sched);
    for (int k = 0; k < 3; ++k) {
        TissueParams t = ms.target(100 + k);
        Fingerprint fp = simulate_fingerprint(t, ms.sched);
        QuantResult plain = quantify(fp, ms.ranges, ms.cfg, ms.sched);
        QuantResult with = quantify(fp, ms.ranges, ms.cfg, ms.sched, &df_dict);
        CHECK(with.params.t1 == plain.params.t1);
        CHECK(with.params.t2 == plain.params.t2);
        CHECK(with.params.df == plain.params.df);
        CHECK(with.evaluations == plain.evaluations);
    }
    // A slab parked at the wrong initial point is rejected.
    Dictionary wrong = generate(slab, ms.sched);
    Fingerprint fp = simulate_fingerprint(ms.target(200), ms.sched);
    CHECK_THROWS(quantify(fp, ms.ranges, ms.cfg, ms.sched, &wrong));
    // So is one built from a different schedule.
    Dictionary foreign = generate(slab_ok, build_schedule(60, 16));
    CHECK_THROWS(quantify(fp, ms.ranges, ms.cfg, ms.sched, &foreign));
}

TEST_CASE("the slab builder lands on the snapped starting point by itself") {
    MiniSetup ms;
    // Initial guesses 1000/500 lie off (and beyond) the axes; the builder must
    // snap and clamp them to 990/155 the same way quantify does.
    Dictionary built = make_df_dictionary(ms.ranges, ms.cfg, ms.sched);
    CHECK(built.grid.t1_ms.count == 1);
    CHECK(built.grid.t2_ms.count == 1);
    CHECK(built.grid.t1_ms.value(0) == 990);
    CHECK(built.grid.t2_ms.value(0) == 155);
    CHECK(built.grid.df_hz.count == ms.grid.df_hz.count);
    TissueParams t = ms.target(103);
    Fingerprint fp = simulate_fingerprint(t, ms.sched);
    QuantResult plain = quantify(fp, ms.ranges, ms.cfg, ms.sched);
    QuantResult with = quantify(fp, ms.ranges, ms.cfg, ms.sched, &built);
    CHECK(with.params.t1 == plain.params.t1);
    CHECK(with.params.t2 == plain.params.t2);
    CHECK(with.params.df == plain.params.df);
    CHECK(with.evaluations == plain.evaluations);
}

TEST_CASE("a full dictionary reproduces the generator answers and brute scores") {
    MiniSetup ms;
    Dictionary dict = generate(ms.grid, ms.sched);
    for (int k = 0; k < 3; ++k) {
        TissueParams t = ms.target(300 + k);
        Fingerprint fp = simulate_fingerprint(t, ms.sched);
        QuantResult gen = quantify(fp, ms.ranges, ms.cfg, ms.sched);
        QuantResult lut = quantify(fp, ms.ranges, ms.cfg, ms.sched, nullptr, &dict);
        CHECK(lut.params.t1 == gen.params.t1);
        CHECK(lut.params.t2 == gen.params.t2);
        CHECK(lut.params.df == gen.params.df);
        // Lookup mode scores through the stored float32 entries, exactly as
        // the exhaustive scan does.
        Match b = brute_force_search(fp, dict);
        CHECK(lut.score == b.score);
    }
}

TEST_CASE("slice quantification: priors save work without changing the maps") {
    MiniSetup ms;
    int nx = 4, ny = 3;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx * ny), 1);
    mask[0] = 0;
    mask[11] = 0;
    // A smooth region: neighboring voxels share parameters, so the seeded
    // windows stay tight.
    std::vector<Fingerprint> fps(static_cast<std::size_t>(nx * ny));
    std::vector<TissueParams> truth(static_cast<std::size_t>(nx * ny));
    for (int v = 0; v < nx * ny; ++v) {
        if (!mask[static_cast<std::size_t>(v)]) continue;
        truth[v] = ms.grid.params_at(20 + static_cast<std::size_t>(v % 2),
                                     8 + static_cast<std::size_t>(v % 3), 10);
        fps[v] = simulate_fingerprint(truth[v], ms.sched);
    }
    SliceResult a = quantify_slice(fps, mask, nx, ny, ms.ranges, ms.cfg, ms.sched, false, 1);
    SliceResult b = quantify_slice(fps, mask, nx, ny, ms.ranges, ms.cfg, ms.sched, false, 2);
    SliceResult c = quantify_slice(fps, mask, nx, ny, ms.ranges, ms.cfg, ms.sched, true, 1);
    for (int v = 0; v < nx * ny; ++v) {
        auto i = static_cast<std::size_t>(v);
        if (!mask[i]) {
            CHECK(a.t1_ms[i] == 0.0);
            continue;
        }
        CHECK(a.t1_ms[i] == doctest::Approx(truth[i].t1 * 1e3).epsilon(1e-12));
        CHECK(a.t2_ms[i] == doctest::Approx(truth[i].t2 * 1e3).epsilon(1e-12));
        CHECK(a.df_hz[i] == doctest::Approx(truth[i].df).epsilon(1e-12));
        CHECK(b.t1_ms[i] == a.t1_ms[i]);
        CHECK(b.t2_ms[i] == a.t2_ms[i]);
        CHECK(b.df_hz[i] == a.df_hz[i]);
        CHECK(c.t1_ms[i] == a.t1_ms[i]);
        CHECK(c.t2_ms[i] == a.t2_ms[i]);
        CHECK(c.df_hz[i] == a.df_hz[i]);
    }
    CHECK(a.total_evaluations == b.total_evaluations);
    CHECK(c.total_evaluations < a.total_evaluations);
}
