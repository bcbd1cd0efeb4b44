#include "mrf/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mrf/util.hpp"

namespace mrf {

namespace {

double band_value(double d, double inner, double mid, double outer, double rim) {
    if (d < 0.25) return inner;
    if (d < 0.55) return mid;
    if (d < 0.80) return outer;
    return rim;
}

double snap(double v, double lo, double hi) {
    return std::clamp(std::round(v), lo, hi);
}

}  // namespace

SliceDef make_phantom(int nx, int ny, std::size_t voxels) {
    if (nx <= 0 || ny <= 0 || voxels == 0 ||
        voxels > static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
        throw std::invalid_argument("make_phantom: bad dimensions");
    SliceDef def;
    def.nx = nx;
    def.ny = ny;
    auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    def.mask.assign(n, 0);
    def.t1_ms.assign(n, 0);
    def.t2_ms.assign(n, 0);
    def.df_hz.assign(n, 0);
    def.pd.assign(n, 0);

    double cx = (nx - 1) / 2.0, cy = (ny - 1) / 2.0;
    double ax = nx * 0.43, ay = ny * 0.33;

    // Exactly `voxels` in-mask positions: keep the elliptically-nearest ones.
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(n);
    std::vector<double> radius(n);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            double u = (x - cx) / ax, v = (y - cy) / ay;
            double d = std::sqrt(u * u + v * v);
            std::size_t i = def.idx(x, y);
            radius[i] = d;
            order.emplace_back(d, i);
        }
    std::sort(order.begin(), order.end());
    double dmax = order[voxels - 1].first;
    for (std::size_t k = 0; k < voxels; ++k) def.mask[order[k].second] = 1;

    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            std::size_t i = def.idx(x, y);
            if (!def.mask[i]) continue;
            double d = radius[i] / (dmax > 0 ? dmax : 1.0);
            double t1 = band_value(d, 2900, 1300, 950, 2300) + 90 * std::sin(x / 5.0) +
                        60 * std::cos(y / 7.0);
            double t2 = band_value(d, 450, 110, 80, 240) + 18 * std::sin(x / 6.0 + 1.0) +
                        12 * std::cos(y / 9.0);
            double df = -20 + 45.0 * (x - cx) / nx + 22 * std::sin(y / 8.0);
            def.t1_ms[i] = snap(t1, 800, 3200);
            def.t2_ms[i] = snap(t2, 60, 600);
            def.df_hz[i] = snap(df, -48, 84);
            def.pd[i] = 0.7 + 0.3 * (1.0 - d * 0.8);
        }
    return def;
}

void save_slice_csv(const SliceDef& def, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path.string());
    f << "x,y,mask,t1_ms,t2_ms,df_hz,pd\n";
    for (int y = 0; y < def.ny; ++y)
        for (int x = 0; x < def.nx; ++x) {
            std::size_t i = def.idx(x, y);
            f << x << ',' << y << ',' << int(def.mask[i]) << ',' << fmt_g9(def.t1_ms[i])
              << ',' << fmt_g9(def.t2_ms[i]) << ',' << fmt_g9(def.df_hz[i]) << ','
              << fmt_g9(def.pd[i]) << '\n';
        }
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

SliceDef load_slice_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open slice: " + path.string());
    std::string line;
    if (!std::getline(f, line) ||
        split_csv_line(line) != std::vector<std::string>{"x", "y", "mask", "t1_ms",
                                                         "t2_ms", "df_hz", "pd"})
        throw std::runtime_error("bad slice header in " + path.string());
    std::vector<std::array<double, 7>> rows;
    int nx = 0, ny = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto cols = split_csv_line(line);
        if (cols.size() != 7)
            throw std::runtime_error("bad slice row in " + path.string());
        std::array<double, 7> r{};
        for (int j = 0; j < 7; ++j) r[j] = parse_double(cols[j]);
        nx = std::max(nx, static_cast<int>(r[0]) + 1);
        ny = std::max(ny, static_cast<int>(r[1]) + 1);
        rows.push_back(r);
    }
    SliceDef def;
    def.nx = nx;
    def.ny = ny;
    auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    if (rows.size() != n)
        throw std::runtime_error("slice raster is not dense in " + path.string());
    def.mask.assign(n, 0);
    def.t1_ms.assign(n, 0);
    def.t2_ms.assign(n, 0);
    def.df_hz.assign(n, 0);
    def.pd.assign(n, 0);
    for (const auto& r : rows) {
        std::size_t i = def.idx(static_cast<int>(r[0]), static_cast<int>(r[1]));
        def.mask[i] = r[2] != 0;
        def.t1_ms[i] = r[3];
        def.t2_ms[i] = r[4];
        def.df_hz[i] = r[5];
        def.pd[i] = r[6];
    }
    return def;
}

}  // namespace mrf
