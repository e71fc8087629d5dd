#pragma once

#include "aqf/core.hpp"
#include "aqf/textio.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aqf {

/// Regular latitude/longitude grid. Row 0 is the southernmost row, column 0
/// the westernmost column; cells are half-open [edge, edge + cell_size).
struct GridSpec
{
    static constexpr double default_cell_size = 0.03;

    double lat_min = 0.0;
    double lon_min = 0.0;
    double cell_size = default_cell_size;
    int n_rows = 0;
    int n_cols = 0;

    void validate() const;

    std::size_t cell_count() const noexcept { return std::size_t(n_rows) * std::size_t(n_cols); }
    std::size_t flat_index(int row, int col) const noexcept { return std::size_t(row) * std::size_t(n_cols) + std::size_t(col); }

    double lat_max() const noexcept { return lat_min + n_rows * cell_size; }
    double lon_max() const noexcept { return lon_min + n_cols * cell_size; }

    GeoPoint cell_centre(int row, int col) const noexcept;

    /// Same extent, different resolution (row/col counts rounded up).
    GridSpec with_cell_size(double cellSize) const;

    bool operator==(const GridSpec&) const = default;

    KeyValues to_key_values() const;
    static GridSpec from_key_values(const KeyValues& kv);
};

struct CellIndex
{
    int row = 0;
    int col = 0;

    bool operator==(const CellIndex&) const = default;
};

/// Containing cell by floor indexing, nullopt outside the grid.
std::optional<CellIndex> cell_index(const GeoPoint& p, const GridSpec& spec) noexcept;

struct SwathSample
{
    GeoPoint location;
    double value = 0.0;
    double qa = 0.0;
    Timestamp time;
};

/// One regridded overpass. Cells with a zero count carry no data.
struct GridField
{
    GridSpec spec;
    std::vector<double> mean;
    std::vector<std::uint32_t> count;
    std::optional<Timestamp> overpass_time;
    std::string variable;

    static GridField empty(const GridSpec& spec, std::string variable = {});

    bool has_data(std::size_t cell) const noexcept { return count[cell] > 0; }
    std::optional<double> value_at(CellIndex c) const noexcept;
};

/// Bins swath samples onto `spec`, keeping samples with qa >= qaThreshold.
///
/// Cell values are the mean of accepted in-bounds samples. The overpass time
/// is the lower median of the accepted sample times (of all samples when none
/// is accepted; unset when there are no samples).
///
/// With threads > 1 the input is cut into `threads` contiguous partitions of
/// near-equal size; each partition accumulates per-cell sums in input order
/// and partitions are merged in partition order. Results are therefore
/// reproducible for a fixed thread count.
GridField bin_swath(std::span<const SwathSample> samples, const GridSpec& spec, double qaThreshold,
                    std::string variable = {}, int threads = 1);

/// CSV `lat,lon,value,qa,time_unix`.
std::vector<SwathSample> read_swath_csv(const fs::path& path);
void write_swath_csv(std::span<const SwathSample> samples, const fs::path& path);

GridSpec read_grid_spec(const fs::path& path);
void write_grid_spec(const GridSpec& spec, const fs::path& path);

/// Sidecar next to a data CSV: `field.csv` -> `field.spec`.
fs::path sidecar_path(const fs::path& csvPath);

/// CSV `row,col,value,count` holding only non-empty cells, plus a one-line
/// `.spec` sidecar with the grid spec, `time_unix` and `variable`.
void write_grid_field(const GridField& field, const fs::path& csvPath);
GridField read_grid_field(const fs::path& csvPath);

}
