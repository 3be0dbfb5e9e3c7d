#pragma once

// Time-sliced occupancy grids over a uniform spatial grid, with set
// operations, Chebyshev morphology, comparison metrics and file IO.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sb::grid {

struct GridSpec {
    std::vector<std::array<double, 2>> bounds;   // per-axis closed interval
    std::vector<int> cells;                      // per-axis count, >= 2
    int time_steps = 1;                          // N; slices at i*horizon/N, i=0..N
    double horizon = 1.0;

    void validate() const;
    int dim() const { return static_cast<int>(bounds.size()); }
    std::int64_t spatial_cells() const;
    int slice_count() const { return time_steps + 1; }
    double dt() const { return horizon / static_cast<double>(time_steps); }
    double time_of(int slice) const { return dt() * static_cast<double>(slice); }
    double cell_width(int axis) const {
        return (bounds[axis][1] - bounds[axis][0]) / static_cast<double>(cells[axis]);
    }

    /// Multi-index <-> linear index (row-major, axis 0 slowest).
    std::int64_t linear(std::span<const int> multi) const;
    void multi(std::int64_t linear, std::span<int> out) const;

    /// Center of a cell by linear index.
    void center(std::int64_t linear, std::span<double> out) const;
    std::vector<double> center(std::int64_t linear) const;

    /// Containing cell of a point, -1 if outside the bounds.
    std::int64_t cell_of(std::span<const double> x) const;

    /// Uniformly refined copy (per-axis factors), same bounds and times.
    GridSpec refined(std::span<const int> factors) const;

    bool operator==(const GridSpec&) const = default;
};

/// One occupancy bit per cell per time slice.
class TimeSlicedGrid {
public:
    TimeSlicedGrid() = default;
    explicit TimeSlicedGrid(GridSpec spec, bool fill = false);

    const GridSpec& spec() const { return spec_; }
    int slice_count() const { return spec_.slice_count(); }
    std::int64_t cells_per_slice() const { return spec_.spatial_cells(); }
    std::size_t words_per_slice() const { return words_per_slice_; }

    bool test(int slice, std::int64_t cell) const {
        const std::size_t bit = bit_index(slice, cell);
        return (bits_[bit >> 6] >> (bit & 63u)) & 1u;
    }
    void set(int slice, std::int64_t cell, bool value = true) {
        const std::size_t bit = bit_index(slice, cell);
        if (value)
            bits_[bit >> 6] |= std::uint64_t{1} << (bit & 63u);
        else
            bits_[bit >> 6] &= ~(std::uint64_t{1} << (bit & 63u));
    }

    std::uint64_t* slice_words(int slice) { return bits_.data() + slice * words_per_slice_; }
    const std::uint64_t* slice_words(int slice) const {
        return bits_.data() + slice * words_per_slice_;
    }

    std::int64_t count() const;
    std::int64_t count_slice(int slice) const;
    std::vector<std::int64_t> occupied_in_slice(int slice) const;

    bool operator==(const TimeSlicedGrid& other) const {
        return spec_ == other.spec_ && bits_ == other.bits_;
    }
    bool is_subset_of(const TimeSlicedGrid& other) const;

    void intersect_with(const TimeSlicedGrid& other);
    void union_with(const TimeSlicedGrid& other);
    void clear_slice(int slice);
    void fill_slice(int slice);

    /// Chebyshev dilation/erosion by r cells within each slice.
    TimeSlicedGrid dilated(int radius) const;
    TimeSlicedGrid eroded(int radius) const;

private:
    std::size_t bit_index(int slice, std::int64_t cell) const {
        return static_cast<std::size_t>(slice) * (words_per_slice_ << 6) +
               static_cast<std::size_t>(cell);
    }

    GridSpec spec_;
    std::size_t words_per_slice_ = 0;
    std::vector<std::uint64_t> bits_;
};

struct GridComparison {
    std::int64_t symmetric_difference_cells = 0;
    bool a_in_dilated_b = false;
    bool b_in_dilated_a = false;
    int dilation_radius = 0;
};

/// Per-slice Chebyshev dilation by `radius`, then mutual inclusion checks.
GridComparison compare_grids(const TimeSlicedGrid& a, const TimeSlicedGrid& b,
                             int radius);

/// Coarsen a grid computed on a refined spec back to the base spec: a coarse
/// cell is occupied iff the fine cell containing its center is occupied.
TimeSlicedGrid coarsen(const TimeSlicedGrid& fine, const GridSpec& base,
                       std::span<const int> factors);

// --- file formats ---------------------------------------------------------
// Binary layout (little endian): magic "SBGR", u32 version, u32 dim,
// dim x (f64 lo, f64 hi, u32 cells), u32 time_steps, f64 horizon,
// then per-slice occupancy words. Round trip is bit exact.

void save_binary(const TimeSlicedGrid& grid, const std::string& path);
TimeSlicedGrid load_binary(const std::string& path);

/// CSV export: header, then one row per occupied cell
/// (t_index, i0..i{dim-1}, occupied).
void save_csv(const TimeSlicedGrid& grid, const std::string& path);

}  // namespace sb::grid
