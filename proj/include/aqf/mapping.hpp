#pragma once

#include "aqf/dataset.hpp"
#include "aqf/forest.hpp"
#include "aqf/join.hpp"
#include "aqf/regrid.hpp"

#include <optional>
#include <span>
#include <vector>

namespace aqf {

/// Values on a GridSpec; nullopt is no-data.
struct Raster
{
    GridSpec spec;
    std::vector<std::optional<double>> cells;

    static Raster empty(const GridSpec& spec);

    std::optional<double> at(int row, int col) const noexcept { return cells[spec.flat_index(row, col)]; }
    void set(int row, int col, double v) { cells[spec.flat_index(row, col)] = v; }
};

/// CSV `row,col,altitude_m` plus `.spec` sidecar.
Raster read_elevation_csv(const fs::path& csvPath);
void write_elevation_csv(const Raster& elevation, const fs::path& csvPath);

/// Per-cell attributes that do not change between overpasses.
struct CellStatics
{
    CellIndex cell;
    GeoPoint centroid; // altitude from the elevation raster
    LandCoverFractions landcover{};
};

struct PredictionGrid
{
    GridSpec spec;
    StationType station_type = StationType::Background;
    /// Cells with land cover and elevation, in row-major order.
    std::vector<CellStatics> cells;
};

/// Computes centroid, elevation and land-cover fractions once per cell.
/// Cells with no land-cover pixel or no elevation value are left out.
PredictionGrid prepare_prediction_grid(const GridSpec& spec, const LandCoverRaster& landcover, const Raster& elevation,
                                       StationType stationType = StationType::Background);

/// Feature rows (without targets) for every prepared cell that has satellite
/// data in `field` and meteo coverage at the overpass time. Rows carry
/// `cell_<row>_<col>` as station id.
FeatureTable build_grid_rows(const PredictionGrid& grid, const GridField& field, const MeteoFieldSet& meteo,
                             std::vector<CellIndex>* cellsOut = nullptr);

/// Convenience form; throws InvalidArgument when no elevation raster is given.
FeatureTable build_grid_rows(const GridSpec& spec, const GridField& field, const MeteoFieldSet& meteo,
                             const LandCoverRaster& landcover, const Raster* elevation,
                             StationType stationType = StationType::Background);

struct PredictionLayer
{
    Timestamp time;
    Raster raster;
};

PredictionLayer predict_layer(const ForestModel& model, const PredictionGrid& grid, const GridField& field,
                              const MeteoFieldSet& meteo, int threads = 1);

/// Cell-wise mean over the layers that predict the cell, combined in
/// ascending layer time; cells never predicted are no-data.
Raster annual_mean(std::span<const PredictionLayer> layers);

struct TimedValue
{
    Timestamp time;
    double value = 0.0;
};

struct MonthlyStats
{
    int month = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double whisker_lo = 0.0; // smallest value >= q1 - 1.5 IQR
    double whisker_hi = 0.0; // largest value <= q3 + 1.5 IQR
    std::size_t n = 0;
};

/// Linear interpolation between closest ranks, position (n - 1) * p.
double quantile_sorted(std::span<const double> sorted, double p);

/// Box-plot statistics per calendar month present in the input, ascending.
std::vector<MonthlyStats> monthly_stats(std::span<const TimedValue> values);

std::vector<TimedValue> layer_values(std::span<const PredictionLayer> layers);

void write_monthly_stats_csv(std::span<const MonthlyStats> stats, const fs::path& path);

inline constexpr double ascii_nodata = -9999.0;

/// ESRI ASCII grid, rows written north to south, shortest round-trip decimals.
void write_ascii_grid(const Raster& raster, const fs::path& path);
Raster read_ascii_grid(const fs::path& path);

/// Prediction layers use the grid-field file layout with count 1 per cell.
void write_prediction_layer(const PredictionLayer& layer, const fs::path& csvPath);
PredictionLayer read_prediction_layer(const fs::path& csvPath);

}
