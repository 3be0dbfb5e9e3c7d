#include "sb/grid.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace sb::grid {

void GridSpec::validate() const {
    if (bounds.empty() || bounds.size() != cells.size())
        throw std::invalid_argument("grid spec: bounds/cells mismatch");
    for (std::size_t a = 0; a < bounds.size(); ++a) {
        if (!(bounds[a][1] > bounds[a][0]))
            throw std::invalid_argument("grid spec: degenerate bounds");
        if (cells[a] < 2)
            throw std::invalid_argument("grid spec: cells must be >= 2 per axis");
    }
    if (time_steps < 1) throw std::invalid_argument("grid spec: time_steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("grid spec: horizon must be > 0");
}

std::int64_t GridSpec::spatial_cells() const {
    std::int64_t total = 1;
    for (int c : cells) total *= c;
    return total;
}

std::int64_t GridSpec::linear(std::span<const int> multi) const {
    std::int64_t idx = 0;
    for (std::size_t a = 0; a < cells.size(); ++a) idx = idx * cells[a] + multi[a];
    return idx;
}

void GridSpec::multi(std::int64_t linear, std::span<int> out) const {
    for (std::size_t a = cells.size(); a > 0;) {
        --a;
        out[a] = static_cast<int>(linear % cells[a]);
        linear /= cells[a];
    }
}

void GridSpec::center(std::int64_t linear, std::span<double> out) const {
    for (std::size_t a = cells.size(); a > 0;) {
        --a;
        const int i = static_cast<int>(linear % cells[a]);
        linear /= cells[a];
        out[a] = bounds[a][0] + cell_width(static_cast<int>(a)) * (i + 0.5);
    }
}

std::vector<double> GridSpec::center(std::int64_t linear) const {
    std::vector<double> out(dim());
    center(linear, out);
    return out;
}

std::int64_t GridSpec::cell_of(std::span<const double> x) const {
    std::int64_t idx = 0;
    for (std::size_t a = 0; a < cells.size(); ++a) {
        const double rel = (x[a] - bounds[a][0]) / cell_width(static_cast<int>(a));
        if (rel < 0.0 || !(rel < 1e18)) return -1;
        std::int64_t i = static_cast<std::int64_t>(rel);
        if (i >= cells[a]) {
            // points exactly on the upper boundary belong to the last cell
            if (x[a] <= bounds[a][1] && i == cells[a]) i = cells[a] - 1;
            else return -1;
        }
        idx = idx * cells[a] + i;
    }
    return idx;
}

GridSpec GridSpec::refined(std::span<const int> factors) const {
    GridSpec out = *this;
    for (std::size_t a = 0; a < cells.size(); ++a) {
        if (factors[a] < 1) throw std::invalid_argument("refine factor must be >= 1");
        out.cells[a] = cells[a] * factors[a];
    }
    return out;
}

TimeSlicedGrid::TimeSlicedGrid(GridSpec spec, bool fill) : spec_(std::move(spec)) {
    spec_.validate();
    const std::int64_t cells = spec_.spatial_cells();
    words_per_slice_ = static_cast<std::size_t>((cells + 63) / 64);
    bits_.assign(words_per_slice_ * spec_.slice_count(), 0);
    if (fill)
        for (int s = 0; s < spec_.slice_count(); ++s) fill_slice(s);
}

std::int64_t TimeSlicedGrid::count() const {
    std::int64_t total = 0;
    for (std::uint64_t w : bits_) total += std::popcount(w);
    return total;
}

std::int64_t TimeSlicedGrid::count_slice(int slice) const {
    const std::uint64_t* w = slice_words(slice);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < words_per_slice_; ++i) total += std::popcount(w[i]);
    return total;
}

std::vector<std::int64_t> TimeSlicedGrid::occupied_in_slice(int slice) const {
    std::vector<std::int64_t> out;
    const std::uint64_t* words = slice_words(slice);
    for (std::size_t wi = 0; wi < words_per_slice_; ++wi) {
        std::uint64_t w = words[wi];
        while (w) {
            const int b = std::countr_zero(w);
            out.push_back(static_cast<std::int64_t>(wi) * 64 + b);
            w &= w - 1;
        }
    }
    return out;
}

bool TimeSlicedGrid::is_subset_of(const TimeSlicedGrid& other) const {
    if (spec_ != other.spec_) throw std::invalid_argument("grid spec mismatch");
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] & ~other.bits_[i]) return false;
    return true;
}

void TimeSlicedGrid::intersect_with(const TimeSlicedGrid& other) {
    if (spec_ != other.spec_) throw std::invalid_argument("grid spec mismatch");
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= other.bits_[i];
}

void TimeSlicedGrid::union_with(const TimeSlicedGrid& other) {
    if (spec_ != other.spec_) throw std::invalid_argument("grid spec mismatch");
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
}

void TimeSlicedGrid::clear_slice(int slice) {
    std::memset(slice_words(slice), 0, words_per_slice_ * sizeof(std::uint64_t));
}

void TimeSlicedGrid::fill_slice(int slice) {
    std::uint64_t* w = slice_words(slice);
    const std::int64_t cells = spec_.spatial_cells();
    for (std::size_t i = 0; i < words_per_slice_; ++i) w[i] = ~std::uint64_t{0};
    const int tail = static_cast<int>(cells & 63);
    if (tail) w[words_per_slice_ - 1] = (std::uint64_t{1} << tail) - 1;
}

namespace {

// Visit the Chebyshev neighborhood of a cell (multi-index form), clipped to
// the grid, invoking fn(linear_index).
template <typename Fn>
void for_neighborhood(const GridSpec& spec, std::span<const int> multi, int radius,
                      Fn&& fn) {
    const int dim = spec.dim();
    std::vector<int> lo(dim), hi(dim), cur(dim);
    for (int a = 0; a < dim; ++a) {
        lo[a] = std::max(0, multi[a] - radius);
        hi[a] = std::min(spec.cells[a] - 1, multi[a] + radius);
        cur[a] = lo[a];
    }
    for (;;) {
        fn(spec.linear(cur));
        int a = dim - 1;
        while (a >= 0) {
            if (++cur[a] <= hi[a]) break;
            cur[a] = lo[a];
            --a;
        }
        if (a < 0) break;
    }
}

}  // namespace

TimeSlicedGrid TimeSlicedGrid::dilated(int radius) const {
    if (radius == 0) return *this;
    TimeSlicedGrid out(spec_);
    std::vector<int> multi(spec_.dim());
    for (int s = 0; s < slice_count(); ++s) {
        for (std::int64_t cell : occupied_in_slice(s)) {
            spec_.multi(cell, multi);
            for_neighborhood(spec_, multi, radius,
                             [&](std::int64_t c) { out.set(s, c); });
        }
    }
    return out;
}

TimeSlicedGrid TimeSlicedGrid::eroded(int radius) const {
    if (radius == 0) return *this;
    TimeSlicedGrid out(spec_);
    std::vector<int> multi(spec_.dim());
    for (int s = 0; s < slice_count(); ++s) {
        for (std::int64_t cell : occupied_in_slice(s)) {
            spec_.multi(cell, multi);
            // keep a cell only if its whole radius-neighborhood (clipped
            // neighborhoods at the boundary fail) is occupied
            bool keep = true;
            for (int a = 0; a < spec_.dim() && keep; ++a)
                keep = multi[a] - radius >= 0 && multi[a] + radius < spec_.cells[a];
            if (keep)
                for_neighborhood(spec_, multi, radius, [&](std::int64_t c) {
                    keep = keep && test(s, c);
                });
            if (keep) out.set(s, cell);
        }
    }
    return out;
}

GridComparison compare_grids(const TimeSlicedGrid& a, const TimeSlicedGrid& b,
                             int radius) {
    if (a.spec() != b.spec()) throw std::invalid_argument("compare_grids: spec mismatch");
    GridComparison cmp;
    cmp.dilation_radius = radius;
    for (int s = 0; s < a.slice_count(); ++s) {
        const std::uint64_t* wa = a.slice_words(s);
        const std::uint64_t* wb = b.slice_words(s);
        for (std::size_t i = 0; i < a.words_per_slice(); ++i)
            cmp.symmetric_difference_cells += std::popcount(wa[i] ^ wb[i]);
    }
    const TimeSlicedGrid da = a.dilated(radius);
    const TimeSlicedGrid db = b.dilated(radius);
    cmp.a_in_dilated_b = a.is_subset_of(db);
    cmp.b_in_dilated_a = b.is_subset_of(da);
    return cmp;
}

TimeSlicedGrid coarsen(const TimeSlicedGrid& fine, const GridSpec& base,
                       std::span<const int> factors) {
    const GridSpec expect = base.refined(factors);
    if (fine.spec() != expect)
        throw std::invalid_argument("coarsen: fine grid does not match refinement");
    TimeSlicedGrid out(base);
    std::vector<double> center(base.dim());
    const std::int64_t cells = base.spatial_cells();
    for (std::int64_t c = 0; c < cells; ++c) {
        base.center(c, center);
        const std::int64_t fc = fine.spec().cell_of(center);
        if (fc < 0) continue;
        for (int s = 0; s < out.slice_count(); ++s)
            if (fine.test(s, fc)) out.set(s, c);
    }
    return out;
}

// --- IO -------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'B', 'G', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("grid file: truncated");
    return v;
}

}  // namespace

void save_binary(const TimeSlicedGrid& grid, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    const GridSpec& spec = grid.spec();
    write_pod(os, static_cast<std::uint32_t>(spec.dim()));
    for (int a = 0; a < spec.dim(); ++a) {
        write_pod(os, spec.bounds[a][0]);
        write_pod(os, spec.bounds[a][1]);
        write_pod(os, static_cast<std::uint32_t>(spec.cells[a]));
    }
    write_pod(os, static_cast<std::uint32_t>(spec.time_steps));
    write_pod(os, spec.horizon);
    for (int s = 0; s < grid.slice_count(); ++s)
        os.write(reinterpret_cast<const char*>(grid.slice_words(s)),
                 static_cast<std::streamsize>(grid.words_per_slice() * sizeof(std::uint64_t)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

TimeSlicedGrid load_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("grid file: bad magic in " + path);
    if (read_pod<std::uint32_t>(is) != kVersion)
        throw std::runtime_error("grid file: unsupported version in " + path);
    GridSpec spec;
    const std::uint32_t dim = read_pod<std::uint32_t>(is);
    for (std::uint32_t a = 0; a < dim; ++a) {
        const double lo = read_pod<double>(is);
        const double hi = read_pod<double>(is);
        spec.bounds.push_back({lo, hi});
        spec.cells.push_back(static_cast<int>(read_pod<std::uint32_t>(is)));
    }
    spec.time_steps = static_cast<int>(read_pod<std::uint32_t>(is));
    spec.horizon = read_pod<double>(is);
    TimeSlicedGrid grid(spec);
    for (int s = 0; s < grid.slice_count(); ++s) {
        is.read(reinterpret_cast<char*>(grid.slice_words(s)),
                static_cast<std::streamsize>(grid.words_per_slice() * sizeof(std::uint64_t)));
        if (!is) throw std::runtime_error("grid file: truncated in " + path);
    }
    return grid;
}

void save_csv(const TimeSlicedGrid& grid, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "t_index";
    for (int a = 0; a < grid.spec().dim(); ++a) os << ",i" << a;
    os << ",occupied\n";
    std::vector<int> multi(grid.spec().dim());
    for (int s = 0; s < grid.slice_count(); ++s) {
        for (std::int64_t cell : grid.occupied_in_slice(s)) {
            grid.spec().multi(cell, multi);
            os << s;
            for (int m : multi) os << ',' << m;
            os << ",1\n";
        }
    }
}

}  // namespace sb::grid
