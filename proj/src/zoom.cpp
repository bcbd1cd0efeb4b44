#include "mrf/zoom.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mrf/parallel.hpp"

namespace mrf {

namespace {

constexpr long kMaxAxis = 1L << 21;

std::uint64_t key_of(long i1, long i2, long idf) {
    return (static_cast<std::uint64_t>(i1) << 42) |
           (static_cast<std::uint64_t>(i2) << 21) | static_cast<std::uint64_t>(idf);
}

Fingerprint to_fp(std::vector<std::complex<double>> v) {
    Fingerprint fp;
    fp.s = std::move(v);
    return fp;
}

void check_close(double a, double b, const char* what) {
    if (std::abs(a - b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}))
        throw std::invalid_argument(std::string("lattice mismatch: ") + what);
}

void check_axis(const AxisSpec& a, const AxisSpec& b, const char* what) {
    check_close(a.min, b.min, what);
    check_close(a.step, b.step, what);
    if (a.count != b.count)
        throw std::invalid_argument(std::string("lattice mismatch: ") + what);
}

}  // namespace

Objective::Objective(const Fingerprint& query, const ParameterGrid& lattice,
                     const Schedule& sched, const Options& opt)
    : lattice_(lattice), sim_(sched), opt_(opt), query_raw_(query) {
    if (query.size() != sched.size())
        throw std::invalid_argument("objective: query length does not match schedule");
    for (const AxisSpec* ax : {&lattice.t1_ms, &lattice.t2_ms, &lattice.df_hz})
        if (ax->count == 0 || ax->count >= static_cast<std::size_t>(kMaxAxis))
            throw std::invalid_argument("objective: lattice axis empty or too fine");
    Fingerprint q = query;
    if (opt_.smooth_k) q = smooth(q, opt_.smooth_k);
    query_ = normalize(q).s;
    if (opt_.full_dict) {
        if (opt_.full_dict->digest != schedule_digest(sched))
            throw std::invalid_argument("objective: dictionary built from another schedule");
        check_axis(opt_.full_dict->grid.t1_ms, lattice.t1_ms, "t1 axis");
        check_axis(opt_.full_dict->grid.t2_ms, lattice.t2_ms, "t2 axis");
        check_axis(opt_.full_dict->grid.df_hz, lattice.df_hz, "df axis");
        if (opt_.full_dict->entry_len != sched.size())
            throw std::invalid_argument("objective: dictionary entry length mismatch");
    }
    if (opt_.df_dict) {
        if (opt_.df_dict->digest != schedule_digest(sched))
            throw std::invalid_argument("objective: df dictionary from another schedule");
        if (opt_.df_dict->grid.t1_ms.count != 1 || opt_.df_dict->grid.t2_ms.count != 1)
            throw std::invalid_argument("objective: df dictionary must fix T1 and T2");
        check_axis(opt_.df_dict->grid.df_hz, lattice.df_hz, "df axis");
        if (opt_.df_dict->entry_len != sched.size())
            throw std::invalid_argument("objective: df dictionary entry length mismatch");
    }
}

Objective::~Objective() = default;

double Objective::score_from_entry(const std::vector<std::complex<double>>& e,
                                   Metric metric) const {
    if (metric == Metric::cc) {
        double re = 0, im = 0;
        for (std::size_t j = 0; j < query_.size(); ++j) {
            re += query_[j].real() * e[j].real() + query_[j].imag() * e[j].imag();
            im += query_[j].imag() * e[j].real() - query_[j].real() * e[j].imag();
        }
        double v = std::sqrt(re * re + im * im);
        return v < 1.0 ? v : 1.0;
    }
    double acc = 0;
    for (std::size_t j = 0; j < query_.size(); ++j) {
        double dr = query_[j].real() - e[j].real();
        double di = query_[j].imag() - e[j].imag();
        acc += dr * dr + di * di;
    }
    return -std::sqrt(acc);
}

const std::vector<std::complex<double>>& Objective::acquire(long i1, long i2, long idf,
                                                            bool df_stage) {
    std::uint64_t k = key_of(i1, i2, idf);
    auto it = entries_.find(k);
    if (it != entries_.end()) return it->second;

    std::vector<std::complex<double>> entry;
    if (opt_.full_dict || (df_stage && opt_.df_dict)) {
        const Dictionary* d = opt_.full_dict ? opt_.full_dict : opt_.df_dict;
        std::size_t flat = opt_.full_dict
                               ? d->grid.flatten(static_cast<std::size_t>(i1),
                                                 static_cast<std::size_t>(i2),
                                                 static_cast<std::size_t>(idf))
                               : static_cast<std::size_t>(idf);
        auto raw = d->entry(flat);
        entry.reserve(d->entry_len);
        for (std::size_t j = 0; j < d->entry_len; ++j)
            entry.emplace_back(raw[2 * j], raw[2 * j + 1]);
        if (opt_.smooth_k)
            entry = normalize(smooth(to_fp(std::move(entry)), opt_.smooth_k)).s;
    } else {
        Fingerprint fp = sim_.simulate(lattice_.params_at(static_cast<std::size_t>(i1),
                                                          static_cast<std::size_t>(i2),
                                                          static_cast<std::size_t>(idf)));
        if (opt_.smooth_k) fp = smooth(fp, opt_.smooth_k);
        entry = normalize(fp).s;
    }
    ++evals_;
    return entries_.emplace(k, std::move(entry)).first->second;
}

double Objective::eval(long i1, long i2, long idf, Metric metric) {
    if (i1 < 0 || i2 < 0 || idf < 0 ||
        i1 >= static_cast<long>(lattice_.t1_ms.count) ||
        i2 >= static_cast<long>(lattice_.t2_ms.count) ||
        idf >= static_cast<long>(lattice_.df_hz.count))
        throw std::out_of_range("objective: lattice index out of range");
    auto& memo = metric == Metric::cc ? memo_cc_ : memo_euc_;
    std::uint64_t k = key_of(i1, i2, idf);
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    double s = score_from_entry(acquire(i1, i2, idf, false), metric);
    memo.emplace(k, s);
    return s;
}

double Objective::eval_df_stage(long i1, long i2, long idf, Metric metric) {
    if (idf < 0 || idf >= static_cast<long>(lattice_.df_hz.count))
        throw std::out_of_range("objective: lattice index out of range");
    auto& memo = metric == Metric::cc ? memo_cc_ : memo_euc_;
    std::uint64_t k = key_of(i1, i2, idf);
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    double s = score_from_entry(acquire(i1, i2, idf, true), metric);
    memo.emplace(k, s);
    return s;
}

Fingerprint Objective::ideal_at(long i1, long i2, long idf) const {
    return sim_.simulate(lattice_.params_at(static_cast<std::size_t>(i1),
                                            static_cast<std::size_t>(i2),
                                            static_cast<std::size_t>(idf)));
}

namespace {

struct Best {
    long idx = -1;
    double val = -1e300;
    void offer(long i, double v) {
        if (v > val) {
            val = v;
            idx = i;
        }
    }
};

}  // namespace

long search_df(const std::function<double(long)>& f, long lo, long hi,
               const DfSearchParams& prm,
               const std::function<void(const char*, long, double)>& stage) {
    if (lo > hi) throw std::invalid_argument("search_df: empty range");
    if (prm.coarse <= 0 || prm.refine <= 0 || prm.finest <= 0 || prm.omega <= 0)
        throw std::invalid_argument("search_df: steps must be positive");
    auto note = [&](const char* name, const Best& b) {
        if (stage) stage(name, b.idx, b.val);
    };
    auto scan = [&](long a, long b, long step, Best& bst) {
        a = std::clamp(a, lo, hi);
        b = std::clamp(b, lo, hi);
        for (long x = a; x <= b; x += step) bst.offer(x, f(x));
        if ((b - a) % step != 0) bst.offer(b, f(b));
    };

    auto run = [&](long coarse, long window_half) -> Best {
        std::vector<double> marks;
        auto plateau = [&] {
            if (marks.size() < 3) return false;
            double mn = marks[marks.size() - 3], mx = mn;
            for (std::size_t j = marks.size() - 3; j < marks.size(); ++j) {
                mn = std::min(mn, marks[j]);
                mx = std::max(mx, marks[j]);
            }
            return mx - mn < prm.plateau_eps;
        };
        Best cur;
        scan(lo, hi, coarse, cur);
        note("df.coarse", cur);
        marks.push_back(cur.val);
        {
            Best r = cur;
            scan(cur.idx - window_half, cur.idx + window_half, prm.refine, r);
            cur = r;
        }
        note("df.refine", cur);
        marks.push_back(cur.val);
        for (int round = 0; round < 8; ++round) {
            Best t = cur;
            for (long k = 1; cur.idx + k * prm.omega <= hi; ++k) {
                long p = cur.idx + k * prm.omega;
                t.offer(p, f(p));
            }
            for (long k = 1; cur.idx - k * prm.omega >= lo; ++k) {
                long p = cur.idx - k * prm.omega;
                t.offer(p, f(p));
            }
            note("df.translate", t);
            if (t.idx == cur.idx) break;
            Best r = t;
            scan(t.idx - window_half, t.idx + window_half, prm.refine, r);
            cur = r;
            note("df.rerefine", cur);
            marks.push_back(cur.val);
            if (plateau()) {
                note("df.plateau_stop", cur);
                return cur;
            }
        }
        if (plateau()) {
            note("df.plateau_stop", cur);
            return cur;
        }
        Best fin = cur;
        scan(cur.idx - prm.omega / 2, cur.idx + prm.omega / 2, prm.finest, fin);
        note("df.finest", fin);
        return fin;
    };

    Best main = run(prm.coarse, prm.window_half);
    if (prm.allow_fallback && main.val < prm.heavy_cc) {
        Best fb = run(prm.fallback_coarse, prm.fallback_window_half);
        note("df.fallback", fb);
        if (fb.val > main.val) return fb.idx;
    }
    return main.idx;
}

long zoom_1d(const std::function<double(long)>& f, long lo, long hi, long init,
             std::span<const long> steps) {
    if (lo > hi) throw std::invalid_argument("zoom_1d: empty range");
    long x = std::clamp(init, lo, hi);
    double fx = f(x);
    for (long s : steps) {
        if (s <= 0) throw std::invalid_argument("zoom_1d: step must be positive");
        for (;;) {
            long xl = std::clamp(x - s, lo, hi);
            if (xl != x) {
                double fl = f(xl);
                if (fl > fx) {
                    x = xl;
                    fx = fl;
                    continue;
                }
            }
            long xr = std::clamp(x + s, lo, hi);
            if (xr != x) {
                double fr = f(xr);
                if (fr > fx) {
                    x = xr;
                    fx = fr;
                    continue;
                }
            }
            break;
        }
    }
    return x;
}

std::pair<long, long> zoom_2d(const std::function<double(long, long)>& f, long lo1,
                              long hi1, long lo2, long hi2, long init1, long init2,
                              std::span<const std::pair<long, long>> steps) {
    if (lo1 > hi1 || lo2 > hi2) throw std::invalid_argument("zoom_2d: empty range");
    long x = std::clamp(init1, lo1, hi1);
    long y = std::clamp(init2, lo2, hi2);
    double fc = f(x, y);
    long bx = x, by = y;
    double bf = fc;
    auto note = [&](long px, long py, double v) {
        if (v > bf) {
            bf = v;
            bx = px;
            by = py;
        }
    };
    for (auto [s1, s2] : steps) {
        if (s1 <= 0 || s2 <= 0) throw std::invalid_argument("zoom_2d: step must be positive");
        long cap = 4 * ((hi1 - lo1) / s1 + (hi2 - lo2) / s2) + 16;
        bool converged = false;
        for (long iter = 0; iter < cap && !converged; ++iter) {
            long xl = std::clamp(x - s1, lo1, hi1);
            long xr = std::clamp(x + s1, lo1, hi1);
            long yd = std::clamp(y - s2, lo2, hi2);
            long yu = std::clamp(y + s2, lo2, hi2);
            double fl = fc, fd = fc;
            if (xl != x) {
                fl = f(xl, y);
                note(xl, y, fl);
            }
            if (yd != y) {
                fd = f(x, yd);
                note(x, yd, fd);
            }
            bool lw = xl != x && fl > fc;
            bool dw = yd != y && fd > fc;
            if (lw && dw) {  // both flanks win: take the corner on faith
                x = xl;
                y = yd;
                fc = f(x, y);
                note(x, y, fc);
                continue;
            }
            if (!lw && !dw) {
                double fr = fc, fu = fc;
                if (xr != x) {
                    fr = f(xr, y);
                    note(xr, y, fr);
                }
                if (yu != y) {
                    fu = f(x, yu);
                    note(x, yu, fu);
                }
                bool rw = xr != x && fr > fc;
                bool uw = yu != y && fu > fc;
                if (rw && uw) {
                    x = xr;
                    y = yu;
                    fc = f(x, y);
                    note(x, y, fc);
                    continue;
                }
                if (rw) {
                    x = xr;
                    fc = fr;
                    continue;
                }
                if (uw) {
                    y = yu;
                    fc = fu;
                    continue;
                }
                converged = true;  // all four flanks lose at this resolution
                continue;
            }
            if (lw) {  // left wins, down loses: arbitrate with the up flank
                double fu = fc;
                if (yu != y) {
                    fu = f(x, yu);
                    note(x, yu, fu);
                }
                if (yu != y && fu > fc) {
                    x = xl;
                    y = yu;
                    fc = f(x, y);
                    note(x, y, fc);
                    continue;
                }
                x = xl;
                fc = fl;
                continue;
            }
            // down wins, left loses: arbitrate with the right flank
            double fr = fc;
            if (xr != x) {
                fr = f(xr, y);
                note(xr, y, fr);
            }
            if (xr != x && fr > fc) {
                x = xr;
                y = yd;
                fc = f(x, y);
                note(x, y, fc);
                continue;
            }
            y = yd;
            fc = fd;
        }
        if (!converged) {  // cycle guard tripped: settle on the best seen
            x = bx;
            y = by;
            fc = bf;
        }
    }
    return {x, y};
}

namespace {

struct Bounds {
    long lo1, hi1, lo2, hi2, lodf, hidf;
};

long snap_index(double value, const AxisSpec& ax) {
    return std::lround((value - ax.min) / ax.step);
}

long step_units(double step_value, double finest) {
    long u = std::lround(step_value / finest);
    return u > 0 ? u : 1;
}

QuantResult quantify_impl(const Fingerprint& fp, const ParameterGrid& lattice,
                          const Bounds& bounds, const ZoomConfig& cfg,
                          const Schedule& sched, const Dictionary* df_dict,
                          const Dictionary* full_dict) {
    auto t_start = std::chrono::steady_clock::now();

    Objective::Options opt;
    opt.smooth_k = cfg.smooth_k;
    opt.full_dict = full_dict;
    opt.df_dict = df_dict;
    Objective obj(fp, lattice, sched, opt);

    long i1 = std::clamp(snap_index(cfg.init_t1_ms, lattice.t1_ms), bounds.lo1, bounds.hi1);
    long i2 = std::clamp(snap_index(cfg.init_t2_ms, lattice.t2_ms), bounds.lo2, bounds.hi2);
    if (df_dict) {
        check_close(df_dict->grid.t1_ms.value(0),
                    lattice.t1_ms.value(static_cast<std::size_t>(i1)),
                    "df dictionary T1 vs initial value");
        check_close(df_dict->grid.t2_ms.value(0),
                    lattice.t2_ms.value(static_cast<std::size_t>(i2)),
                    "df dictionary T2 vs initial value");
    }

    QuantResult res;
    std::size_t last_evals = 0;
    auto log_stage = [&](const std::string& name, long a1, long a2, long adf, double best) {
        StageLog lg;
        lg.stage = name;
        lg.evaluations = obj.evaluations() - last_evals;
        last_evals = obj.evaluations();
        lg.best = best;
        lg.t1_ms = lattice.t1_ms.value(static_cast<std::size_t>(a1));
        lg.t2_ms = lattice.t2_ms.value(static_cast<std::size_t>(a2));
        lg.df_hz = lattice.df_hz.value(static_cast<std::size_t>(adf));
        res.trace.push_back(std::move(lg));
    };

    // Stage 1: off-resonance at the initial T1/T2.
    DfSearchParams prm;
    prm.coarse = step_units(cfg.df_coarse_hz, lattice.df_hz.step);
    prm.refine = step_units(cfg.df_refine_hz, lattice.df_hz.step);
    prm.finest = 1;
    prm.window_half = step_units(cfg.df_window_hz / 2, lattice.df_hz.step);
    prm.omega = step_units(cfg.omega_hz, lattice.df_hz.step);
    prm.plateau_eps = cfg.plateau_eps;
    prm.heavy_cc = cfg.metric == Metric::cc ? cfg.heavy_noise_cc : -1e300;
    prm.fallback_coarse = step_units(cfg.fallback_coarse_hz, lattice.df_hz.step);
    prm.fallback_window_half = step_units(cfg.fallback_window_hz / 2, lattice.df_hz.step);

    auto f_df = [&](long idf) { return obj.eval_df_stage(i1, i2, idf, cfg.metric); };
    long idf = search_df(f_df, bounds.lodf, bounds.hidf, prm,
                         [&](const char* name, long bi, double bv) {
                             log_stage(name, i1, i2, bi, bv);
                         });

    // Stage 2: coarse 2-D T1/T2 zoom at the tentative off-resonance.
    auto f_2d = [&](long a, long b) { return obj.eval(a, b, idf, cfg.metric); };
    std::vector<std::pair<long, long>> steps2d;
    for (double s : cfg.t1t2_2d_steps_ms)
        steps2d.emplace_back(step_units(s, lattice.t1_ms.step),
                             step_units(s, lattice.t2_ms.step));
    std::tie(i1, i2) = zoom_2d(f_2d, bounds.lo1, bounds.hi1, bounds.lo2, bounds.hi2, i1,
                               i2, steps2d);
    log_stage("t1t2.2d", i1, i2, idf, obj.eval(i1, i2, idf, cfg.metric));

    // Stage 3: finest off-resonance sweep over one pseudo-period.
    {
        Best b;
        long a = std::clamp(idf - prm.omega / 2, bounds.lodf, bounds.hidf);
        long z = std::clamp(idf + prm.omega / 2, bounds.lodf, bounds.hidf);
        for (long k = a; k <= z; ++k) b.offer(k, obj.eval(i1, i2, k, cfg.metric));
        idf = b.idx;
        log_stage("df.sweep", i1, i2, idf, b.val);
    }

    // Stage 4: interleaved 1-D refinements.
    for (double s : cfg.t1t2_1d_steps_ms) {
        long u1 = step_units(s, lattice.t1_ms.step);
        i1 = zoom_1d([&](long a) { return obj.eval(a, i2, idf, cfg.metric); }, bounds.lo1,
                     bounds.hi1, i1, {&u1, 1});
        log_stage("t1.1d", i1, i2, idf, obj.eval(i1, i2, idf, cfg.metric));
        long u2 = step_units(s, lattice.t2_ms.step);
        i2 = zoom_1d([&](long a) { return obj.eval(i1, a, idf, cfg.metric); }, bounds.lo2,
                     bounds.hi2, i2, {&u2, 1});
        log_stage("t2.1d", i1, i2, idf, obj.eval(i1, i2, idf, cfg.metric));
    }

    // Stage 5: final 2-D polish at the finest pitch, optionally under the
    // distance metric.
    {
        auto f_fin = [&](long a, long b) { return obj.eval(a, b, idf, cfg.final_metric); };
        std::pair<long, long> fin{step_units(cfg.final_2d_step_ms, lattice.t1_ms.step),
                                  step_units(cfg.final_2d_step_ms, lattice.t2_ms.step)};
        std::tie(i1, i2) = zoom_2d(f_fin, bounds.lo1, bounds.hi1, bounds.lo2, bounds.hi2,
                                   i1, i2, {&fin, 1});
        log_stage("t1t2.final", i1, i2, idf, obj.eval(i1, i2, idf, cfg.final_metric));
    }

    res.score = obj.eval(i1, i2, idf, cfg.metric);
    res.params = lattice.params_at(static_cast<std::size_t>(i1),
                                   static_cast<std::size_t>(i2),
                                   static_cast<std::size_t>(idf));
    res.params.pd = estimate_pd(fp, obj.ideal_at(i1, i2, idf));
    res.evaluations = obj.evaluations();
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

Bounds full_bounds(const ParameterGrid& lattice) {
    return {0, static_cast<long>(lattice.t1_ms.count) - 1,
            0, static_cast<long>(lattice.t2_ms.count) - 1,
            0, static_cast<long>(lattice.df_hz.count) - 1};
}

}  // namespace

QuantResult quantify(const Fingerprint& fp, const SearchRanges& ranges,
                     const ZoomConfig& cfg, const Schedule& sched,
                     const Dictionary* df_dict, const Dictionary* full_dict) {
    ParameterGrid lattice = grid_from_ranges(ranges.t1_ms, ranges.t2_ms, ranges.df_hz);
    return quantify_impl(fp, lattice, full_bounds(lattice), cfg, sched, df_dict,
                         full_dict);
}

Dictionary make_df_dictionary(const SearchRanges& ranges, const ZoomConfig& cfg,
                              const Schedule& sched, int workers) {
    ParameterGrid lattice = grid_from_ranges(ranges.t1_ms, ranges.t2_ms, ranges.df_hz);
    long i1 = std::clamp(snap_index(cfg.init_t1_ms, lattice.t1_ms), 0L,
                         static_cast<long>(lattice.t1_ms.count) - 1);
    long i2 = std::clamp(snap_index(cfg.init_t2_ms, lattice.t2_ms), 0L,
                         static_cast<long>(lattice.t2_ms.count) - 1);
    double t1 = lattice.t1_ms.value(static_cast<std::size_t>(i1));
    double t2 = lattice.t2_ms.value(static_cast<std::size_t>(i2));
    AxisRange t1r{t1, t1 + lattice.t1_ms.step, lattice.t1_ms.step};
    AxisRange t2r{t2, t2 + lattice.t2_ms.step, lattice.t2_ms.step};
    return generate(grid_from_ranges(t1r, t2r, ranges.df_hz), sched, workers);
}

SliceResult quantify_slice(const std::vector<Fingerprint>& fps,
                           const std::vector<std::uint8_t>& mask, int nx, int ny,
                           const SearchRanges& ranges, const ZoomConfig& cfg,
                           const Schedule& sched, bool use_prior, int workers,
                           const Dictionary* df_dict) {
    auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    if (nx <= 0 || ny <= 0 || fps.size() != n || mask.size() != n)
        throw std::invalid_argument("quantify_slice: inconsistent raster dimensions");
    ParameterGrid lattice = grid_from_ranges(ranges.t1_ms, ranges.t2_ms, ranges.df_hz);

    SliceResult out;
    out.nx = nx;
    out.ny = ny;
    out.t1_ms.assign(n, 0);
    out.t2_ms.assign(n, 0);
    out.df_hz.assign(n, 0);
    out.pd.assign(n, 0);
    out.score.assign(n, 0);
    out.evaluations.assign(n, 0);

    std::vector<std::size_t> voxels;
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) voxels.push_back(i);

    auto t_start = std::chrono::steady_clock::now();
    auto store = [&](std::size_t i, const QuantResult& q) {
        out.t1_ms[i] = q.params.t1 * 1e3;
        out.t2_ms[i] = q.params.t2 * 1e3;
        out.df_hz[i] = q.params.df;
        out.pd[i] = q.params.pd;
        out.score[i] = q.score;
        out.evaluations[i] = q.evaluations;
    };

    if (use_prior) {
        bool have_prior = false;
        QuantResult prior;
        for (std::size_t i : voxels) {
            ZoomConfig c = cfg;
            Bounds b = full_bounds(lattice);
            if (have_prior) {
                c.init_t1_ms = prior.params.t1 * 1e3;
                c.init_t2_ms = prior.params.t2 * 1e3;
                long p1 = snap_index(prior.params.t1 * 1e3, lattice.t1_ms);
                long p2 = snap_index(prior.params.t2 * 1e3, lattice.t2_ms);
                long pdf = snap_index(prior.params.df, lattice.df_hz);
                long w1 = step_units(cfg.prior_window_t1_ms, lattice.t1_ms.step);
                long w2 = step_units(cfg.prior_window_t2_ms, lattice.t2_ms.step);
                long wdf = step_units(cfg.prior_window_df_hz, lattice.df_hz.step);
                b.lo1 = std::max(b.lo1, p1 - w1);
                b.hi1 = std::min(b.hi1, p1 + w1);
                b.lo2 = std::max(b.lo2, p2 - w2);
                b.hi2 = std::min(b.hi2, p2 + w2);
                b.lodf = std::max(b.lodf, pdf - wdf);
                b.hidf = std::min(b.hidf, pdf + wdf);
            }
            QuantResult q = quantify_impl(fps[i], lattice, b, c, sched, df_dict, nullptr);
            store(i, q);
            prior = std::move(q);
            have_prior = true;
        }
    } else {
        parallel_blocks(voxels.size(), workers, [&](std::size_t a, std::size_t z) {
            for (std::size_t k = a; k < z; ++k) {
                std::size_t i = voxels[k];
                store(i, quantify_impl(fps[i], lattice, full_bounds(lattice), cfg, sched,
                                       df_dict, nullptr));
            }
        });
    }
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    for (std::size_t i : voxels) out.total_evaluations += out.evaluations[i];
    return out;
}

}  // namespace mrf
