#pragma once

#include "aqf/core.hpp"
#include "aqf/join.hpp"
#include "aqf/regrid.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aqf {

/// Model features in their fixed column order.
enum class Feature : std::size_t
{
    day_of_week,
    day_of_year,
    hour,
    month,
    year,
    station_type_code,
    latitude,
    longitude,
    altitude_m,
    satellite_value,
    lc_continuous_urban,
    lc_discontinuous_urban,
    lc_industrial,
    lc_road_rail,
    lc_port,
    lc_airport,
    lc_broadleaf,
    wind_speed,
    wind_direction,
    dewpoint_2m,
    evaporation,
    temp_2m,
    precip_total,
    surface_pressure,
    blh,
    ssrd,
};

inline constexpr std::size_t feature_count = 26;

std::string_view feature_name(Feature f) noexcept;
const std::vector<std::string>& feature_names();

struct FeatureRow
{
    std::array<double, feature_count> features{};
    std::optional<double> target; // µg/m³; absent for prediction rows
    std::string station_id;
    Timestamp time;

    double& operator[](Feature f) noexcept { return features[std::size_t(f)]; }
    double operator[](Feature f) const noexcept { return features[std::size_t(f)]; }
};

struct FeatureTable
{
    std::vector<FeatureRow> rows;
    std::optional<PollutantKind> pollutant; // not stored in the CSV
    std::optional<int> year;

    /// Throws DataError on non-finite features, fractions outside [0, 1],
    /// negative targets or duplicate (station_id, time) pairs.
    void validate() const;

    /// Sorts rows by (time, station_id).
    void sort_rows();
};

/// Static per-station row content shared by every overpass.
void fill_station_features(FeatureRow& row, const StationMeta& meta);
void fill_temporal_features(FeatureRow& row, Timestamp t);
void fill_meteo_features(FeatureRow& row, const MeteoValues& meteo);
void fill_landcover_features(FeatureRow& row, const LandCoverFractions& lc);

/// One row per (station, overpass) with satellite data in the station's cell,
/// an interpolated observation and meteo coverage; other pairs are dropped.
/// Land-cover fractions come from the station's grid cell. Rows are sorted by
/// (overpass time, station_id).
///
/// Throws DataError when the fields do not share one grid spec, a field's
/// variable does not match the pollutant, or two fields share an overpass time.
FeatureTable build_table(std::span<const StationSeries> stations, std::span<const GridField> fields,
                         const MeteoFieldSet& meteo, const LandCoverRaster& landcover, PollutantKind pollutant,
                         Duration maxGap = default_max_gap);

/// CSV: the 26 feature columns followed by `station_id,time_unix,target`.
/// Prediction rows leave `target` empty.
void write_table(const FeatureTable& table, const fs::path& path);
FeatureTable read_table(const fs::path& path);

std::vector<std::string> table_columns();

}
