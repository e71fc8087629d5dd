#pragma once

#include "aqf/core.hpp"
#include "aqf/regrid.hpp"
#include "aqf/textio.hpp"

#include <array>
#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aqf {

using Duration = std::chrono::seconds;

inline constexpr Duration default_max_gap = std::chrono::hours(2);

struct ObservationSample
{
    Timestamp time;
    double value = 0.0; // µg/m³
};

/// Hourly concentrations of one station. Sample timestamps label the start of
/// the measurement interval.
struct StationSeries
{
    StationMeta meta;
    std::vector<ObservationSample> samples;

    /// Throws DataError unless timestamps strictly increase and values are finite and non-negative.
    void validate() const;
};

/// Linear interpolation of the station series at `t`.
///
/// An exact timestamp match returns that sample. Otherwise the bracketing pair
/// (last sample before t, first after) is used, provided the pair spans at
/// most `maxGap`; nullopt when t is not bracketed or the gap is too wide.
std::optional<double> interp_observation(const StationSeries& series, Timestamp t, Duration maxGap = default_max_gap);

enum class MeteoVariable : std::size_t
{
    dewpoint_2m,
    temp_2m,
    wind_u10,
    wind_v10,
    ssrd,
    evaporation,
    precip_total,
    blh,
    surface_pressure,
};

inline constexpr std::size_t meteo_variable_count = 9;
std::string_view meteo_variable_name(MeteoVariable v) noexcept;
inline constexpr std::array<MeteoVariable, meteo_variable_count> all_meteo_variables{
    MeteoVariable::dewpoint_2m, MeteoVariable::temp_2m, MeteoVariable::wind_u10,
    MeteoVariable::wind_v10, MeteoVariable::ssrd, MeteoVariable::evaporation,
    MeteoVariable::precip_total, MeteoVariable::blh, MeteoVariable::surface_pressure};

/// Hourly reanalysis fields on a shared node lattice.
///
/// Node (row, col) sits at (lat_min + row * cell_size, lon_min + col * cell_size);
/// the spec's `n_rows`/`n_cols` count nodes. Accumulated variables are expected
/// as hourly totals. Missing nodes hold NaN.
class MeteoFieldSet
{
public:
    static constexpr double default_cell_size = 0.25;

    MeteoFieldSet() = default;
    MeteoFieldSet(const GridSpec& spec, Timestamp start, int hourCount);

    const GridSpec& spec() const noexcept { return _spec; }
    Timestamp start() const noexcept { return _start; }
    int hour_count() const noexcept { return _hours; }

    double& at(MeteoVariable v, int hour, int row, int col);
    double at(MeteoVariable v, int hour, int row, int col) const;

    /// Hour slot for an exact hourly timestamp; nullopt when off-grid or out of range.
    std::optional<int> hour_index(Timestamp t) const noexcept;

private:
    std::size_t offset(int hour, int row, int col) const noexcept;

    GridSpec _spec;
    Timestamp _start;
    int _hours = 0;
    std::array<std::vector<double>, meteo_variable_count> _values;
};

struct MeteoValues
{
    std::array<double, meteo_variable_count> values{};
    double wind_speed = 0.0;
    double wind_direction = 0.0;

    double operator[](MeteoVariable v) const noexcept { return values[std::size_t(v)]; }
};

/// Bilinear in space at the two bracketing hours, then linear in time; wind
/// speed/direction derived from the interpolated components.
/// Throws DataError when the point or time lies outside the field set or a
/// contributing node is missing.
MeteoValues meteo_at(const MeteoFieldSet& fields, const GeoPoint& p, Timestamp t);

/// As meteo_at, nullopt instead of an error.
std::optional<MeteoValues> try_meteo_at(const MeteoFieldSet& fields, const GeoPoint& p, Timestamp t) noexcept;

/// Per-variable CSV `<dir>/<variable>.csv` (`time_unix,row,col,value`) plus
/// `<dir>/meteo.spec` holding the node lattice and `start_unix`, `hours`.
MeteoFieldSet read_meteo_dir(const fs::path& dir);
void write_meteo_dir(const MeteoFieldSet& fields, const fs::path& dir);

/// The land-cover classes turned into features, in feature order.
enum class LandCoverClass : std::size_t
{
    continuous_urban,
    discontinuous_urban,
    industrial,
    road_rail,
    port,
    airport,
    broadleaf,
};

inline constexpr std::size_t landcover_class_count = 7;

/// Three-digit nomenclature code of a selected class (111, 112, 121, 122, 123, 124, 311).
int landcover_code(LandCoverClass c) noexcept;

/// True for any of the 44 codes of the land-cover nomenclature.
bool is_valid_landcover_code(int code) noexcept;

using LandCoverFractions = std::array<double, landcover_class_count>;

/// Class-code raster on a geographic grid (pixel size ~100 m). Code 0 marks
/// missing pixels.
struct LandCoverRaster
{
    GridSpec spec;
    std::vector<std::uint16_t> codes;

    static LandCoverRaster filled(const GridSpec& spec, int code);

    int code_at(int row, int col) const noexcept { return codes[spec.flat_index(row, col)]; }
    void set(int row, int col, int code);
};

struct GeoRect
{
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;

    static GeoRect of_cell(const GridSpec& spec, CellIndex c) noexcept;
};

/// Fractions of the selected classes among valid pixels whose centres fall in
/// the half-open rectangle. Throws DataError when no pixel centre falls inside.
LandCoverFractions landcover_fractions(const LandCoverRaster& raster, const GeoRect& cell);

/// Fractions for every cell of `grid` in one pass over the raster; pixels are
/// assigned with the grid's own cell indexing so each counts for exactly one
/// cell. Cells without pixels are nullopt.
std::vector<std::optional<LandCoverFractions>> landcover_grid(const LandCoverRaster& raster, const GridSpec& grid);

/// CSV `row,col,class_code` plus `.spec` sidecar with the pixel grid.
LandCoverRaster read_landcover_csv(const fs::path& csvPath);
void write_landcover_csv(const LandCoverRaster& raster, const fs::path& csvPath);

/// CSV `station_id,lat,lon,altitude_m,station_type_code`.
std::vector<StationMeta> read_station_meta_csv(const fs::path& path);
void write_station_meta_csv(std::span<const StationMeta> stations, const fs::path& path);

/// CSV `station_id,time_unix,value` joined with the metadata; stations without
/// metadata are an error, stations without observations get an empty series.
std::vector<StationSeries> read_station_series_csv(const fs::path& path, std::span<const StationMeta> stations);
void write_station_series_csv(std::span<const StationSeries> series, const fs::path& path);

}
