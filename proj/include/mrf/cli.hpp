#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mrf/dictionary.hpp"
#include "mrf/zoom.hpp"

namespace mrf {

// Settings for one command run. Defaults reproduce the desk-scale studies;
// config files and --set overrides adjust individual keys.
struct RunConfig {
    std::filesystem::path out_dir = ".";
    int workers = 1;
    std::uint64_t seed = 1;  // schedule seed
    std::size_t n = 500;     // schedule length
    std::filesystem::path schedule_path;  // when set, wins over (n, seed)

    // Shared search volume; steps double as the brute-force grid pitch and
    // the zoom's finest lattice.
    AxisRange t1_range{500, 2000, 10};
    AxisRange t2_range{200, 800, 10};
    AxisRange df_range{-30, 450, 2};

    ZoomConfig zoom;

    // eval
    std::size_t targets = 25;
    std::uint64_t target_seed = 7;
    std::vector<std::string> modes{"brute", "zoom", "zoom-dfdict"};
    std::size_t chunk_entries = 1 << 15;

    // ccmap
    TissueParams map_target{1.4, 0.5, 100, 1};
    std::vector<double> map_t1_set{600, 1000, 1800, 2600, 3400};
    std::vector<double> map_t2_set{100, 300, 700, 900, 1100};
    bool write_binary_map = false;

    // slice
    std::filesystem::path slice_path;  // empty: built-in phantom
    std::string prior_mode = "both";   // off | on | both

    // noise
    std::vector<double> noise_targets{0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4,
                                      0.3,  0.2, 0.15, 0.1, 0.07, 0.05};
    std::uint64_t noise_seed = 11;
    std::vector<int> smooth_ks{0, 3, 5};
    double restricted_at_cc = 0.4;  // level that also gets the brute comparison
    double rb_t1_half = 550, rb_t2_half = 300, rb_df_half = 50;

    // gen-dict
    std::filesystem::path dict_out;
};

// key=value file, '#' comments, blank lines ignored. Unknown keys error.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_override(RunConfig& cfg, const std::string& key_equals_value);

Schedule schedule_for(const RunConfig& cfg);

int cmd_gen_schedule(const RunConfig& cfg);
int cmd_gen_dict(const RunConfig& cfg);
int cmd_ccmap(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_slice(const RunConfig& cfg);
int cmd_noise(const RunConfig& cfg);

}  // namespace mrf
