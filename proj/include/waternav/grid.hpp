#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "waternav/geom.hpp"

namespace waternav {

struct CellIndex {
    int i = 0;  // column, +x
    int j = 0;  // row, +y
    bool operator==(const CellIndex&) const = default;
};

// Binary occupancy grid. Cell value 1 = free waterway, 0 = obstacle.
// `origin` is the world position of the center of cell (0,0); cell (i,j)
// has center origin + (i,j)*cell_size, rows ordered south-to-north.
struct OccupancyGrid {
    int width = 0;
    int height = 0;
    double cell_size = 0.0;
    Vec2 origin{};
    std::vector<std::uint8_t> cells;  // row-major, index = j*width + i

    std::uint8_t at(int i, int j) const { return cells[static_cast<std::size_t>(j) * width + i]; }
    void set(int i, int j, std::uint8_t v) { cells[static_cast<std::size_t>(j) * width + i] = v; }

    bool in_bounds(int i, int j) const { return i >= 0 && i < width && j >= 0 && j < height; }

    // 1 = free, 0 = obstacle; cells outside the map count as obstacle.
    bool is_free(int i, int j) const { return in_bounds(i, j) && at(i, j) == 1; }

    Vec2 cell_center(int i, int j) const {
        return {origin.x + i * cell_size, origin.y + j * cell_size};
    }

    // World extent covered by the grid (cell squares are half-open).
    double min_x() const { return origin.x - 0.5 * cell_size; }
    double min_y() const { return origin.y - 0.5 * cell_size; }
    double max_x() const { return origin.x + (width - 0.5) * cell_size; }
    double max_y() const { return origin.y + (height - 0.5) * cell_size; }

    void validate() const {
        if (width <= 0 || height <= 0) throw std::invalid_argument("grid: non-positive dimensions");
        if (cell_size <= 0.0) throw std::invalid_argument("grid: non-positive cell size");
        if (cells.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("grid: cell count does not match dimensions");
        for (std::uint8_t c : cells)
            if (c > 1) throw std::invalid_argument("grid: cell value not 0/1");
    }
};

// Ship footprint for collision checks. The margin inflates the rectangle
// on all sides, so the effective extent is
// (length + 2*margin) x (width + 2*margin).
struct Footprint {
    double length = 15.0;
    double width = 4.0;
    double safety_margin = 2.0;

    double half_length() const { return 0.5 * length + safety_margin; }
    double half_width() const { return 0.5 * width + safety_margin; }
};

namespace detail {

inline int pnm_next_int(std::istream& in) {
    // skips whitespace and '#' comments
    while (true) {
        int c = in.peek();
        if (c == EOF) throw std::runtime_error("pgm: truncated header");
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v = 0;
    if (!(in >> v)) throw std::runtime_error("pgm: malformed header");
    return v;
}

}  // namespace detail

// Parses a portable graymap (P2 ascii or P5 binary). Pixel values < 128 map
// to obstacle (0), the rest to free (1). Image row 0 is the top of the map
// (largest world y), so rows are flipped into the south-to-north grid order.
inline OccupancyGrid load_grid(const std::string& pgm_content, double cell_size, Vec2 origin) {
    std::istringstream in(pgm_content, std::ios::binary);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") throw std::runtime_error("pgm: unsupported magic '" + magic + "'");
    const int w = detail::pnm_next_int(in);
    const int h = detail::pnm_next_int(in);
    const int maxval = detail::pnm_next_int(in);
    if (w <= 0 || h <= 0) throw std::runtime_error("pgm: zero or negative dimensions");
    if (maxval <= 0 || maxval > 255) throw std::runtime_error("pgm: unsupported maxval");

    OccupancyGrid g;
    g.width = w;
    g.height = h;
    g.cell_size = cell_size;
    g.origin = origin;
    g.cells.assign(static_cast<std::size_t>(w) * h, 0);

    auto put = [&](int image_row, int col, int value) {
        const int j = h - 1 - image_row;  // image row 0 = largest world y
        g.set(col, j, value < 128 ? 0 : 1);
    };

    if (magic == "P2") {
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) put(r, c, detail::pnm_next_int(in));
    } else {
        in.get();  // single whitespace after maxval
        std::vector<char> buf(static_cast<std::size_t>(w) * h);
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            throw std::runtime_error("pgm: truncated pixel data");
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                put(r, c, static_cast<unsigned char>(buf[static_cast<std::size_t>(r) * w + c]));
    }
    g.validate();
    return g;
}

inline OccupancyGrid load_grid_file(const std::string& path, double cell_size, Vec2 origin) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open map file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return load_grid(ss.str(), cell_size, origin);
}

// Serializes the grid as a binary graymap (free = 255, obstacle = 0),
// row 0 on top. Inverse of load_grid for two-level images.
inline std::string grid_to_pgm(const OccupancyGrid& g) {
    std::ostringstream out(std::ios::binary);
    out << "P5\n" << g.width << " " << g.height << "\n255\n";
    for (int r = 0; r < g.height; ++r) {
        const int j = g.height - 1 - r;
        for (int i = 0; i < g.width; ++i)
            out.put(g.at(i, j) == 1 ? static_cast<char>(255) : static_cast<char>(0));
    }
    return out.str();
}

// Cell containing world point `p`, or nullopt when outside the grid extent.
inline std::optional<CellIndex> world_to_cell(const OccupancyGrid& g, Vec2 p) {
    const int i = static_cast<int>(std::floor((p.x - g.origin.x) / g.cell_size + 0.5));
    const int j = static_cast<int>(std::floor((p.y - g.origin.y) / g.cell_size + 0.5));
    if (!g.in_bounds(i, j)) return std::nullopt;
    return CellIndex{i, j};
}

namespace detail {

struct OrientedRect {
    Vec2 center{};
    Vec2 axis_u{};  // unit, along length
    Vec2 axis_v{};  // unit, along width
    double half_u = 0.0;
    double half_v = 0.0;

    std::array<Vec2, 4> corners() const {
        const Vec2 du = axis_u * half_u;
        const Vec2 dv = axis_v * half_v;
        return {center + du + dv, center + du - dv, center - du - dv, center - du + dv};
    }
};

// Separating-axis overlap between an oriented rectangle and an axis-aligned
// square centered at `c` with half side `hs`. Touching contact does not
// count as overlap.
inline bool rect_overlaps_square(const OrientedRect& r, Vec2 c, double hs) {
    const auto rc = r.corners();
    // axes of the square
    double rminx = rc[0].x, rmaxx = rc[0].x, rminy = rc[0].y, rmaxy = rc[0].y;
    for (int k = 1; k < 4; ++k) {
        rminx = std::min(rminx, rc[k].x);
        rmaxx = std::max(rmaxx, rc[k].x);
        rminy = std::min(rminy, rc[k].y);
        rmaxy = std::max(rmaxy, rc[k].y);
    }
    if (rmaxx <= c.x - hs || rminx >= c.x + hs) return false;
    if (rmaxy <= c.y - hs || rminy >= c.y + hs) return false;
    // axes of the rectangle
    auto separated = [&](const Vec2& axis, double rect_half) {
        const double rc_proj = r.center.dot(axis);
        const double cp = c.dot(axis);
        const double ch = hs * (std::abs(axis.x) + std::abs(axis.y));
        return rc_proj + rect_half <= cp - ch || rc_proj - rect_half >= cp + ch;
    };
    if (separated(r.axis_u, r.half_u) || separated(r.axis_v, r.half_v)) return false;
    return true;
}

}  // namespace detail

// Oriented rectangle covered by the margin-inflated footprint translating in
// a straight line from `start` to `end`. Orientation is the bearing of the
// segment; when the points coincide, `fallback_heading` is used.
inline detail::OrientedRect swept_rect(Vec2 start, Vec2 end, double fallback_heading,
                                       const Footprint& fp) {
    detail::OrientedRect r;
    const Vec2 d = end - start;
    const double len = d.norm();
    const double heading = len > 1e-12 ? std::atan2(d.y, d.x) : fallback_heading;
    r.axis_u = unit_from_angle(heading);
    r.axis_v = r.axis_u.perp();
    r.center = {0.5 * (start.x + end.x), 0.5 * (start.y + end.y)};
    r.half_u = 0.5 * len + fp.half_length();
    r.half_v = fp.half_width();
    return r;
}

struct Pose {
    Vec2 position{};
    double heading = 0.0;
};

// True iff the footprint swept from `start_pose.position` to `end` overlaps
// an obstacle cell or leaves the grid extent. Out-of-map is an obstacle.
inline bool swept_collision(const OccupancyGrid& g, const Pose& start_pose, Vec2 end,
                            const Footprint& fp) {
    const auto rect = swept_rect(start_pose.position, end, start_pose.heading, fp);
    const auto corners = rect.corners();
    double minx = corners[0].x, maxx = corners[0].x, miny = corners[0].y, maxy = corners[0].y;
    for (int k = 1; k < 4; ++k) {
        minx = std::min(minx, corners[k].x);
        maxx = std::max(maxx, corners[k].x);
        miny = std::min(miny, corners[k].y);
        maxy = std::max(maxy, corners[k].y);
    }
    if (minx < g.min_x() || maxx > g.max_x() || miny < g.min_y() || maxy > g.max_y()) return true;

    const double hs = 0.5 * g.cell_size;
    const int i0 = std::max(0, static_cast<int>(std::floor((minx - g.origin.x) / g.cell_size)));
    const int i1 = std::min(g.width - 1, static_cast<int>(std::ceil((maxx - g.origin.x) / g.cell_size)));
    const int j0 = std::max(0, static_cast<int>(std::floor((miny - g.origin.y) / g.cell_size)));
    const int j1 = std::min(g.height - 1, static_cast<int>(std::ceil((maxy - g.origin.y) / g.cell_size)));
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            if (g.at(i, j) == 0 && detail::rect_overlaps_square(rect, g.cell_center(i, j), hs))
                return true;
    return false;
}

// Static footprint check at a single pose (zero-length sweep).
inline bool footprint_collision(const OccupancyGrid& g, const Pose& pose, const Footprint& fp) {
    return swept_collision(g, pose, pose.position, fp);
}

// Euclidean distance from `p` to the nearest obstacle cell center. The ring
// of virtual cells just outside the grid counts as obstacles. `p` must lie
// inside the grid extent.
inline double nearest_obstacle_distance(const OccupancyGrid& g, Vec2 p) {
    if (p.x < g.min_x() || p.x > g.max_x() || p.y < g.min_y() || p.y > g.max_y())
        throw std::invalid_argument("nearest_obstacle_distance: point outside grid extent");
    double best_sq = std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.height; ++j) {
        const double dy = p.y - (g.origin.y + j * g.cell_size);
        const double dysq = dy * dy;
        if (dysq >= best_sq) continue;
        const std::size_t row = static_cast<std::size_t>(j) * g.width;
        for (int i = 0; i < g.width; ++i) {
            if (g.cells[row + i] != 0) continue;
            const double dx = p.x - (g.origin.x + i * g.cell_size);
            const double d = dx * dx + dysq;
            if (d < best_sq) best_sq = d;
        }
    }
    // virtual boundary ring, one cell beyond each edge (corners via clamp)
    auto ring_side = [&](double fixed_x, bool horizontal) {
        double d;
        if (horizontal) {
            const int jn = std::clamp(static_cast<int>(std::lround((p.y - g.origin.y) / g.cell_size)), -1, g.height);
            const double cy = g.origin.y + jn * g.cell_size;
            d = (p.x - fixed_x) * (p.x - fixed_x) + (p.y - cy) * (p.y - cy);
        } else {
            const int in = std::clamp(static_cast<int>(std::lround((p.x - g.origin.x) / g.cell_size)), -1, g.width);
            const double cx = g.origin.x + in * g.cell_size;
            d = (p.x - cx) * (p.x - cx) + (p.y - fixed_x) * (p.y - fixed_x);
        }
        if (d < best_sq) best_sq = d;
    };
    ring_side(g.origin.x - g.cell_size, true);
    ring_side(g.origin.x + g.width * g.cell_size, true);
    ring_side(g.origin.y - g.cell_size, false);
    ring_side(g.origin.y + g.height * g.cell_size, false);
    return std::sqrt(best_sq);
}

// Empirical CDF: one (value, P(X <= value)) pair per distinct sample value,
// sorted ascending; the final probability is exactly 1.
inline std::vector<std::pair<double, double>> distance_cdf(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("distance_cdf: empty sample list");
    for (double s : samples)
        if (!std::isfinite(s) || s < 0.0) throw std::invalid_argument("distance_cdf: invalid sample");
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> cdf;
    const double n = static_cast<double>(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (k + 1 < samples.size() && samples[k + 1] == samples[k]) continue;
        cdf.emplace_back(samples[k], static_cast<double>(k + 1) / n);
    }
    cdf.back().second = 1.0;
    return cdf;
}

// Fraction of samples <= x under an empirical CDF from distance_cdf.
inline double cdf_at(const std::vector<std::pair<double, double>>& cdf, double x) {
    double p = 0.0;
    for (const auto& [v, q] : cdf) {
        if (v <= x) p = q;
        else break;
    }
    return p;
}

}  // namespace waternav
