#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mrf {

// Ground-truth tissue raster for a synthetic slice. Values sit exactly on
// the 1 ms / 1 Hz quantification lattice; off-mask voxels are zero.
struct SliceDef {
    int nx = 0, ny = 0;
    std::vector<std::uint8_t> mask;
    std::vector<double> t1_ms, t2_ms, df_hz, pd;

    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(x);
    }
    std::size_t masked_count() const {
        std::size_t c = 0;
        for (auto m : mask) c += m;
        return c;
    }
};

// Deterministic head-like phantom: an elliptical mask holding exactly
// `voxels` in-mask positions (nearest to the center win), with banded,
// smoothly varying T1/T2, a smooth off-resonance field, and a mild
// proton-density gradient.
SliceDef make_phantom(int nx = 64, int ny = 64, std::size_t voxels = 1731);

// CSV layout: header "x,y,mask,t1_ms,t2_ms,df_hz,pd", one row per voxel in
// raster order.
void save_slice_csv(const SliceDef& def, const std::filesystem::path& path);
SliceDef load_slice_csv(const std::filesystem::path& path);

}  // namespace mrf
