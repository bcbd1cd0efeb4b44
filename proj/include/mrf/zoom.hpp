#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrf/dictionary.hpp"

namespace mrf {

// Search ranges per parameter: half-open [min, max) in display units, with
// `step` as the finest lattice pitch the search may resolve.
struct SearchRanges {
    AxisRange t1_ms{100, 5500, 1};
    AxisRange t2_ms{50, 1200, 1};
    AxisRange df_hz{-300, 300, 1};
};

struct ZoomConfig {
    Metric metric = Metric::cc;
    Metric final_metric = Metric::cc;  // metric of the last 2-D polish stage
    int smooth_k = 0;                  // 0 (off), 3, or 5 tap filtering

    // Off-resonance stage: coarse sweep, windowed refinement, pseudo-period
    // translation check, finest sweep over one period.
    double omega_hz = 70;
    double df_coarse_hz = 60;
    double df_refine_hz = 3;
    double df_window_hz = 150;  // full width of the refinement window
    double plateau_eps = 1e-7;  // three successive stage bests within this stop early
    double heavy_noise_cc = 0.1;
    double fallback_coarse_hz = 30;
    double fallback_window_hz = 300;

    // T1/T2 stages, milliseconds.
    std::vector<double> t1t2_2d_steps_ms{200, 100};
    std::vector<double> t1t2_1d_steps_ms{100, 50, 20, 10};
    double final_2d_step_ms = 1;

    // Starting guesses for the first stage.
    double init_t1_ms = 1000;
    double init_t2_ms = 500;

    // Window half-widths applied around a neighbor-seeded prior.
    double prior_window_t1_ms = 3000;
    double prior_window_t2_ms = 800;
    double prior_window_df_hz = 150;
};

struct StageLog {
    std::string stage;
    std::size_t evaluations = 0;  // unique evaluations this stage added
    double best = 0;
    double t1_ms = 0, t2_ms = 0, df_hz = 0;
};

struct QuantResult {
    TissueParams params;
    double score = 0;
    std::size_t evaluations = 0;
    double seconds = 0;
    std::vector<StageLog> trace;
};

// Memoizing objective over the finest search lattice. Each unique lattice
// point costs one fingerprint generation (or one dictionary lookup); repeat
// visits and metric switches reuse the cached entry and are free.
class Objective {
  public:
    struct Options {
        int smooth_k = 0;
        const Dictionary* full_dict = nullptr;  // every point is a lookup
        const Dictionary* df_dict = nullptr;    // first-stage lookups only
    };

    Objective(const Fingerprint& query, const ParameterGrid& lattice,
              const Schedule& sched, const Options& opt);
    ~Objective();

    double eval(long i1, long i2, long idf, Metric metric);
    // First-stage variant: identical key space, but the entry may come from
    // the prior off-resonance dictionary.
    double eval_df_stage(long i1, long i2, long idf, Metric metric);

    std::size_t evaluations() const { return evals_; }
    const ParameterGrid& lattice() const { return lattice_; }
    // Unsmoothed, un-normalized fingerprint at a lattice point (for
    // proton-density scaling; not counted as a search evaluation).
    Fingerprint ideal_at(long i1, long i2, long idf) const;

  private:
    double score_from_entry(const std::vector<std::complex<double>>& entry,
                            Metric metric) const;
    const std::vector<std::complex<double>>& acquire(long i1, long i2, long idf,
                                                     bool df_stage);

    ParameterGrid lattice_;
    BlochSimulator sim_;
    Options opt_;
    std::vector<std::complex<double>> query_;
    Fingerprint query_raw_;
    std::size_t evals_ = 0;
    std::unordered_map<std::uint64_t, std::vector<std::complex<double>>> entries_;
    std::unordered_map<std::uint64_t, double> memo_cc_;
    std::unordered_map<std::uint64_t, double> memo_euc_;
};

// Off-resonance search over integer lattice indices [lo, hi]. All step and
// window fields are lattice units. `stage` is invoked after each internal
// phase with (name, best index, best score).
struct DfSearchParams {
    long coarse = 60;
    long refine = 3;
    long finest = 1;
    long window_half = 75;
    long omega = 70;
    double plateau_eps = 1e-7;
    double heavy_cc = 0.1;     // rerun coarser/wider when the best stays below
    long fallback_coarse = 30;
    long fallback_window_half = 150;
    bool allow_fallback = true;
};
long search_df(const std::function<double(long)>& f, long lo, long hi,
               const DfSearchParams& prm,
               const std::function<void(const char*, long, double)>& stage = {});

// Hill descent on an integer lattice, coarse-to-fine. At each step size the
// left flank is probed first; a winning flank is taken without probing the
// other side. Ties keep the center. Candidates clamp to [lo, hi].
long zoom_1d(const std::function<double(long)>& f, long lo, long hi, long init,
             std::span<const long> steps);

// Two-dimensional variant: probes left and down first, jumps to a diagonal
// corner when both flanks win, and finishes a resolution once all four
// flanks lose. A per-resolution iteration cap returns the best point seen if
// a non-unimodal objective ever cycles.
std::pair<long, long> zoom_2d(const std::function<double(long, long)>& f, long lo1,
                              long hi1, long lo2, long hi2, long init1, long init2,
                              std::span<const std::pair<long, long>> steps);

// Full parameter-separable search: off-resonance stage at the initial T1/T2,
// coarse 2-D T1/T2 zoom, finest off-resonance sweep over one pseudo-period,
// interleaved 1-D T1/T2 refinements, and a final 2-D polish.
QuantResult quantify(const Fingerprint& fp, const SearchRanges& ranges,
                     const ZoomConfig& cfg, const Schedule& sched,
                     const Dictionary* df_dict = nullptr,
                     const Dictionary* full_dict = nullptr);

// Precomputed dictionary for quantify()'s first stage: the full off-resonance
// axis at the starting T1/T2. The starting values are snapped and clamped onto
// the search lattice exactly as quantify() snaps them, so the slab always
// matches what the search will request.
Dictionary make_df_dictionary(const SearchRanges& ranges, const ZoomConfig& cfg,
                              const Schedule& sched, int workers = 1);

struct SliceResult {
    int nx = 0, ny = 0;
    std::vector<double> t1_ms, t2_ms, df_hz, pd, score;  // nx*ny, row-major, 0 off-mask
    std::vector<std::size_t> evaluations;
    std::size_t total_evaluations = 0;
    double seconds = 0;
};

// Quantify every masked voxel of a raster (index y*nx + x). With use_prior,
// voxels run in raster order and each one seeds its initial values from the
// last processed voxel and restricts the search to windows around it; the
// windows restrict lattice index bounds only, so the lattice anchoring (and
// therefore the answers) cannot drift. Without priors, voxels are
// independent and may run on several workers.
SliceResult quantify_slice(const std::vector<Fingerprint>& fps,
                           const std::vector<std::uint8_t>& mask, int nx, int ny,
                           const SearchRanges& ranges, const ZoomConfig& cfg,
                           const Schedule& sched, bool use_prior, int workers = 1,
                           const Dictionary* df_dict = nullptr);

}  // namespace mrf
