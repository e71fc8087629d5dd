#include "aqf/dataset.hpp"
#include "aqf/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace aqf {

namespace {

constexpr std::array<std::string_view, feature_count> s_featureNames{
    "day_of_week", "day_of_year", "hour", "month", "year",
    "station_type_code", "latitude", "longitude", "altitude_m",
    "satellite_value",
    "lc_continuous_urban", "lc_discontinuous_urban", "lc_industrial", "lc_road_rail", "lc_port", "lc_airport", "lc_broadleaf",
    "wind_speed", "wind_direction", "dewpoint_2m", "evaporation", "temp_2m", "precip_total", "surface_pressure", "blh", "ssrd"};

bool is_fraction(Feature f)
{
    return f >= Feature::lc_continuous_urban && f <= Feature::lc_broadleaf;
}

}

std::string_view feature_name(Feature f) noexcept
{
    return s_featureNames[std::size_t(f)];
}

const std::vector<std::string>& feature_names()
{
    static const std::vector<std::string> names(s_featureNames.begin(), s_featureNames.end());
    return names;
}

std::vector<std::string> table_columns()
{
    auto cols = feature_names();
    cols.insert(cols.end(), {"station_id", "time_unix", "target"});
    return cols;
}

void FeatureTable::validate() const
{
    std::set<std::pair<std::string, std::int64_t>> keys;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        for (std::size_t f = 0; f < feature_count; ++f) {
            const double v = r.features[f];
            if (!std::isfinite(v)) {
                throw DataError("Row {}: feature '{}' is not finite", i + 1, s_featureNames[f]);
            }
            if (is_fraction(Feature(f)) && (v < 0.0 || v > 1.0)) {
                throw DataError("Row {}: fraction '{}' = {} outside [0, 1]", i + 1, s_featureNames[f], v);
            }
        }
        if (r.target && (!std::isfinite(*r.target) || *r.target < 0.0)) {
            throw DataError("Row {}: target {} must be finite and non-negative", i + 1, *r.target);
        }
        if (!keys.emplace(r.station_id, r.time.unix_seconds()).second) {
            throw DataError("Row {}: duplicate (station_id, time) pair ('{}', {})", i + 1, r.station_id, r.time.to_iso());
        }
    }
}

void FeatureTable::sort_rows()
{
    std::stable_sort(rows.begin(), rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
        if (a.time != b.time) {
            return a.time < b.time;
        }
        return a.station_id < b.station_id;
    });
}

void fill_station_features(FeatureRow& row, const StationMeta& meta)
{
    row.station_id = meta.station_id;
    row[Feature::station_type_code] = station_type_code(meta.station_type);
    row[Feature::latitude] = meta.location.latitude;
    row[Feature::longitude] = meta.location.longitude;
    row[Feature::altitude_m] = meta.location.altitude;
}

void fill_temporal_features(FeatureRow& row, Timestamp t)
{
    const auto tf = temporal_features(t);
    row.time = t;
    row[Feature::day_of_week] = tf.day_of_week;
    row[Feature::day_of_year] = tf.day_of_year;
    row[Feature::hour] = tf.hour;
    row[Feature::month] = tf.month;
    row[Feature::year] = tf.year;
}

void fill_meteo_features(FeatureRow& row, const MeteoValues& m)
{
    row[Feature::wind_speed] = m.wind_speed;
    row[Feature::wind_direction] = m.wind_direction;
    row[Feature::dewpoint_2m] = m[MeteoVariable::dewpoint_2m];
    row[Feature::evaporation] = m[MeteoVariable::evaporation];
    row[Feature::temp_2m] = m[MeteoVariable::temp_2m];
    row[Feature::precip_total] = m[MeteoVariable::precip_total];
    row[Feature::surface_pressure] = m[MeteoVariable::surface_pressure];
    row[Feature::blh] = m[MeteoVariable::blh];
    row[Feature::ssrd] = m[MeteoVariable::ssrd];
}

void fill_landcover_features(FeatureRow& row, const LandCoverFractions& lc)
{
    for (std::size_t i = 0; i < landcover_class_count; ++i) {
        row.features[std::size_t(Feature::lc_continuous_urban) + i] = lc[i];
    }
}

FeatureTable build_table(std::span<const StationSeries> stations, std::span<const GridField> fields,
                         const MeteoFieldSet& meteo, const LandCoverRaster& landcover, PollutantKind pollutant,
                         Duration maxGap)
{
    FeatureTable table;
    table.pollutant = pollutant;
    if (fields.empty() || stations.empty()) {
        log_warning("Feature table for {} is empty: no {}", pollutant_name(pollutant), fields.empty() ? "satellite fields" : "stations");
        return table;
    }

    const GridSpec& spec = fields.front().spec;
    std::set<std::int64_t> times;
    for (const auto& f : fields) {
        if (!(f.spec == spec)) {
            throw DataError("Satellite fields do not share one grid spec");
        }
        if (!f.variable.empty() && f.variable != satellite_variable(pollutant)) {
            throw DataError("Satellite field variable '{}' does not match {} ({})", f.variable, pollutant_name(pollutant), satellite_variable(pollutant));
        }
        if (f.overpass_time && !times.insert(f.overpass_time->unix_seconds()).second) {
            throw DataError("Two satellite fields share overpass time {}", f.overpass_time->to_iso());
        }
    }

    const auto lcGrid = landcover_grid(landcover, spec);

    for (const auto& field : fields) {
        if (!field.overpass_time) {
            continue;
        }
        const Timestamp t = *field.overpass_time;
        for (const auto& station : stations) {
            const auto cell = cell_index(station.meta.location, spec);
            if (!cell) {
                continue;
            }
            const auto idx = spec.flat_index(cell->row, cell->col);
            if (!field.has_data(idx) || !lcGrid[idx]) {
                continue;
            }
            const auto obs = interp_observation(station, t, maxGap);
            if (!obs) {
                continue;
            }
            const auto met = try_meteo_at(meteo, station.meta.location, t);
            if (!met) {
                continue;
            }

            FeatureRow row;
            fill_temporal_features(row, t);
            fill_station_features(row, station.meta);
            row[Feature::satellite_value] = field.mean[idx];
            fill_landcover_features(row, *lcGrid[idx]);
            fill_meteo_features(row, *met);
            row.target = *obs;
            table.rows.push_back(std::move(row));
        }
    }

    table.sort_rows();
    table.validate();
    if (table.rows.empty()) {
        log_warning("Feature table for {} is empty: no complete (station, overpass) pair", pollutant_name(pollutant));
    } else {
        table.year = static_cast<int>(table.rows.front()[Feature::year]);
    }
    return table;
}

void write_table(const FeatureTable& table, const fs::path& path)
{
    auto out = open_output(path);
    const auto cols = table_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const auto& r : table.rows) {
        for (double v : r.features) {
            out << format_double(v) << ',';
        }
        out << r.station_id << ',' << r.time.unix_seconds() << ',';
        if (r.target) {
            out << format_double(*r.target);
        }
        out << '\n';
    }
}

FeatureTable read_table(const fs::path& path)
{
    CsvReader csv(path);
    csv.require_columns(table_columns());

    std::array<std::size_t, feature_count> featureCols{};
    for (std::size_t f = 0; f < feature_count; ++f) {
        featureCols[f] = csv.column(s_featureNames[f]);
    }
    const auto cId = csv.column("station_id");
    const auto cTime = csv.column("time_unix");
    const auto cTarget = csv.column("target");

    FeatureTable table;
    while (csv.next()) {
        FeatureRow row;
        for (std::size_t f = 0; f < feature_count; ++f) {
            row.features[f] = csv.get_double(featureCols[f]);
        }
        row.station_id = csv.get_string(cId);
        const auto t = csv.get_int(cTime);
        if (!Timestamp::is_valid_unix(t)) {
            throw DataError("'{}' row {} column 'time_unix': {} outside supported years", path.string(), csv.row_number(), t);
        }
        row.time = Timestamp::from_unix(t);
        if (!csv.is_empty(cTarget)) {
            row.target = csv.get_double(cTarget);
        }
        table.rows.push_back(std::move(row));
    }
    try {
        table.validate();
    } catch (const DataError& e) {
        throw DataError("'{}': {}", path.string(), e.what());
    }
    if (!table.rows.empty()) {
        table.year = static_cast<int>(table.rows.front()[Feature::year]);
    }
    return table;
}

}
