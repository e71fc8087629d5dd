#include "aqf/join.hpp"
#include "aqf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace aqf {

void StationSeries::validate() const
{
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!std::isfinite(s.value) || s.value < 0.0) {
            throw DataError("Station '{}': invalid concentration {} at {}", meta.station_id, s.value, s.time.to_iso());
        }
        if (i > 0 && !(samples[i - 1].time < s.time)) {
            throw DataError("Station '{}': timestamps not strictly increasing at {}", meta.station_id, s.time.to_iso());
        }
    }
}

std::optional<double> interp_observation(const StationSeries& series, Timestamp t, Duration maxGap)
{
    if (maxGap.count() <= 0) {
        throw InvalidArgument("max_gap must be positive");
    }
    const auto& s = series.samples;
    auto it = std::lower_bound(s.begin(), s.end(), t, [](const ObservationSample& a, Timestamp b) { return a.time < b; });
    if (it != s.end() && it->time == t) {
        return it->value;
    }
    if (it == s.begin() || it == s.end()) {
        return std::nullopt;
    }
    const auto& after = *it;
    const auto& before = *(it - 1);
    const auto span = after.time.unix_seconds() - before.time.unix_seconds();
    if (span > maxGap.count()) {
        return std::nullopt;
    }
    const double w = double(t.unix_seconds() - before.time.unix_seconds()) / double(span);
    return before.value + w * (after.value - before.value);
}

std::string_view meteo_variable_name(MeteoVariable v) noexcept
{
    switch (v) {
    case MeteoVariable::dewpoint_2m: return "dewpoint_2m";
    case MeteoVariable::temp_2m: return "temp_2m";
    case MeteoVariable::wind_u10: return "wind_u10";
    case MeteoVariable::wind_v10: return "wind_v10";
    case MeteoVariable::ssrd: return "ssrd";
    case MeteoVariable::evaporation: return "evaporation";
    case MeteoVariable::precip_total: return "precip_total";
    case MeteoVariable::blh: return "blh";
    case MeteoVariable::surface_pressure: return "surface_pressure";
    }
    return "";
}

MeteoFieldSet::MeteoFieldSet(const GridSpec& spec, Timestamp start, int hourCount)
: _spec(spec)
, _start(start)
, _hours(hourCount)
{
    _spec.validate();
    if (hourCount <= 0) {
        throw InvalidArgument("Meteo field set needs at least one hour");
    }
    for (auto& v : _values) {
        v.assign(std::size_t(hourCount) * spec.cell_count(), std::numeric_limits<double>::quiet_NaN());
    }
}

std::size_t MeteoFieldSet::offset(int hour, int row, int col) const noexcept
{
    return std::size_t(hour) * _spec.cell_count() + _spec.flat_index(row, col);
}

double& MeteoFieldSet::at(MeteoVariable v, int hour, int row, int col)
{
    return _values[std::size_t(v)][offset(hour, row, col)];
}

double MeteoFieldSet::at(MeteoVariable v, int hour, int row, int col) const
{
    return _values[std::size_t(v)][offset(hour, row, col)];
}

std::optional<int> MeteoFieldSet::hour_index(Timestamp t) const noexcept
{
    const auto d = t.unix_seconds() - _start.unix_seconds();
    if (d < 0 || d % 3600 != 0 || d / 3600 >= _hours) {
        return std::nullopt;
    }
    return static_cast<int>(d / 3600);
}

namespace {

struct AxisPos
{
    int index = 0;
    double frac = 0.0;
};

std::optional<AxisPos> locate(double v, double origin, double step, int n) noexcept
{
    double pos = (v - origin) / step;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-9) {
        pos = nearest;
    }
    if (!(pos >= 0.0 && pos <= n - 1)) {
        return std::nullopt;
    }
    if (n == 1) {
        return AxisPos{0, 0.0};
    }
    const int i = std::min(static_cast<int>(std::floor(pos)), n - 2);
    return AxisPos{i, pos - i};
}

struct Weighted
{
    int hour = 0;
    int row = 0;
    int col = 0;
    double weight = 0.0;
};

}

std::optional<MeteoValues> try_meteo_at(const MeteoFieldSet& fields, const GeoPoint& p, Timestamp t) noexcept
{
    const auto& spec = fields.spec();
    const auto y = locate(p.latitude, spec.lat_min, spec.cell_size, spec.n_rows);
    const auto x = locate(p.longitude, spec.lon_min, spec.cell_size, spec.n_cols);
    const auto h = locate(double(t.unix_seconds() - fields.start().unix_seconds()), 0.0, 3600.0, fields.hour_count());
    if (!y || !x || !h) {
        return std::nullopt;
    }

    // Nodes with zero weight are skipped so that missing neighbours do not
    // poison exact node hits.
    std::array<Weighted, 8> nodes;
    std::size_t n = 0;
    for (int dh = 0; dh < 2; ++dh) {
        const double wh = dh == 0 ? 1.0 - h->frac : h->frac;
        for (int dr = 0; dr < 2; ++dr) {
            const double wr = dr == 0 ? 1.0 - y->frac : y->frac;
            for (int dc = 0; dc < 2; ++dc) {
                const double wc = dc == 0 ? 1.0 - x->frac : x->frac;
                const double w = wh * wr * wc;
                if (w > 0.0) {
                    nodes[n++] = Weighted{h->index + dh, y->index + dr, x->index + dc, w};
                }
            }
        }
    }

    MeteoValues out;
    for (auto var : all_meteo_variables) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = fields.at(var, nodes[i].hour, nodes[i].row, nodes[i].col);
            if (!std::isfinite(v)) {
                return std::nullopt;
            }
            acc += nodes[i].weight * v;
        }
        out.values[std::size_t(var)] = acc;
    }
    const auto w = wind(out[MeteoVariable::wind_u10], out[MeteoVariable::wind_v10]);
    out.wind_speed = w.speed;
    out.wind_direction = w.direction;
    return out;
}

MeteoValues meteo_at(const MeteoFieldSet& fields, const GeoPoint& p, Timestamp t)
{
    if (auto v = try_meteo_at(fields, p, t)) {
        return *v;
    }
    throw DataError("No meteo coverage at ({}, {}) {}", p.latitude, p.longitude, t.to_iso());
}

MeteoFieldSet read_meteo_dir(const fs::path& dir)
{
    const auto kv = KeyValues::read(dir / "meteo.spec");
    const auto spec = GridSpec::from_key_values(kv);
    const auto start = kv.get_int("start_unix");
    const auto hours = kv.get_int("hours");
    if (!Timestamp::is_valid_unix(start) || start % 3600 != 0) {
        throw DataError("'{}': start_unix must be a valid whole hour", (dir / "meteo.spec").string());
    }
    if (hours <= 0) {
        throw DataError("'{}': hours must be positive", (dir / "meteo.spec").string());
    }
    MeteoFieldSet fields(spec, Timestamp::from_unix(start), static_cast<int>(hours));

    for (auto var : all_meteo_variables) {
        const auto path = dir / (std::string(meteo_variable_name(var)) + ".csv");
        CsvReader csv(path);
        csv.require_columns({"time_unix", "row", "col", "value"});
        const auto cTime = csv.column("time_unix");
        const auto cRow = csv.column("row");
        const auto cCol = csv.column("col");
        const auto cValue = csv.column("value");
        while (csv.next()) {
            const auto t = csv.get_int(cTime);
            const auto r = csv.get_int(cRow);
            const auto c = csv.get_int(cCol);
            std::optional<int> h;
            if (Timestamp::is_valid_unix(t)) {
                h = fields.hour_index(Timestamp::from_unix(t));
            }
            if (!h) {
                throw DataError("'{}' row {}: time {} is not an hour of the field set", path.string(), csv.row_number(), t);
            }
            if (r < 0 || r >= spec.n_rows || c < 0 || c >= spec.n_cols) {
                throw DataError("'{}' row {}: node ({}, {}) outside lattice", path.string(), csv.row_number(), r, c);
            }
            fields.at(var, *h, int(r), int(c)) = csv.get_double(cValue);
        }
    }
    return fields;
}

void write_meteo_dir(const MeteoFieldSet& fields, const fs::path& dir)
{
    auto kv = fields.spec().to_key_values();
    kv.set("start_unix", fields.start().unix_seconds());
    kv.set("hours", std::int64_t(fields.hour_count()));
    {
        auto out = open_output(dir / "meteo.spec");
        out << kv.to_line() << '\n';
    }
    const auto& spec = fields.spec();
    for (auto var : all_meteo_variables) {
        auto out = open_output(dir / (std::string(meteo_variable_name(var)) + ".csv"));
        out << "time_unix,row,col,value\n";
        for (int h = 0; h < fields.hour_count(); ++h) {
            const auto t = fields.start().unix_seconds() + std::int64_t(h) * 3600;
            for (int r = 0; r < spec.n_rows; ++r) {
                for (int c = 0; c < spec.n_cols; ++c) {
                    const double v = fields.at(var, h, r, c);
                    if (std::isfinite(v)) {
                        out << t << ',' << r << ',' << c << ',' << format_double(v) << '\n';
                    }
                }
            }
        }
    }
}

int landcover_code(LandCoverClass c) noexcept
{
    static constexpr std::array<int, landcover_class_count> codes{111, 112, 121, 122, 123, 124, 311};
    return codes[std::size_t(c)];
}

bool is_valid_landcover_code(int code) noexcept
{
    static constexpr std::array<int, 44> codes{
        111, 112, 121, 122, 123, 124, 131, 132, 133, 141, 142,
        211, 212, 213, 221, 222, 223, 231, 241, 242, 243, 244,
        311, 312, 313, 321, 322, 323, 324, 331, 332, 333, 334, 335,
        411, 412, 421, 422, 423,
        511, 512, 521, 522, 523};
    return std::find(codes.begin(), codes.end(), code) != codes.end();
}

namespace {

std::optional<std::size_t> selected_class(int code) noexcept
{
    for (std::size_t i = 0; i < landcover_class_count; ++i) {
        if (landcover_code(LandCoverClass(i)) == code) {
            return i;
        }
    }
    return std::nullopt;
}

}

LandCoverRaster LandCoverRaster::filled(const GridSpec& spec, int code)
{
    spec.validate();
    if (code != 0 && !is_valid_landcover_code(code)) {
        throw InvalidArgument("Invalid land-cover class code {}", code);
    }
    LandCoverRaster r;
    r.spec = spec;
    r.codes.assign(spec.cell_count(), static_cast<std::uint16_t>(code));
    return r;
}

void LandCoverRaster::set(int row, int col, int code)
{
    if (code != 0 && !is_valid_landcover_code(code)) {
        throw InvalidArgument("Invalid land-cover class code {}", code);
    }
    codes[spec.flat_index(row, col)] = static_cast<std::uint16_t>(code);
}

GeoRect GeoRect::of_cell(const GridSpec& spec, CellIndex c) noexcept
{
    GeoRect r;
    r.lat_min = spec.lat_min + c.row * spec.cell_size;
    r.lat_max = r.lat_min + spec.cell_size;
    r.lon_min = spec.lon_min + c.col * spec.cell_size;
    r.lon_max = r.lon_min + spec.cell_size;
    return r;
}

LandCoverFractions landcover_fractions(const LandCoverRaster& raster, const GeoRect& cell)
{
    const auto& spec = raster.spec;
    // Candidate index range with one pixel of margin; containment is tested exactly below.
    auto range = [](double lo, double hi, double origin, double step, int n) {
        int first = static_cast<int>(std::floor((lo - origin) / step - 0.5)) - 1;
        int last = static_cast<int>(std::ceil((hi - origin) / step - 0.5)) + 1;
        return std::pair{std::max(first, 0), std::min(last, n - 1)};
    };
    const auto [r0, r1] = range(cell.lat_min, cell.lat_max, spec.lat_min, spec.cell_size, spec.n_rows);
    const auto [c0, c1] = range(cell.lon_min, cell.lon_max, spec.lon_min, spec.cell_size, spec.n_cols);

    LandCoverFractions counts{};
    std::size_t total = 0;
    for (int r = r0; r <= r1; ++r) {
        const double lat = spec.lat_min + (r + 0.5) * spec.cell_size;
        if (!(lat >= cell.lat_min && lat < cell.lat_max)) {
            continue;
        }
        for (int c = c0; c <= c1; ++c) {
            const double lon = spec.lon_min + (c + 0.5) * spec.cell_size;
            if (!(lon >= cell.lon_min && lon < cell.lon_max)) {
                continue;
            }
            const int code = raster.code_at(r, c);
            if (code == 0) {
                continue;
            }
            ++total;
            if (auto k = selected_class(code)) {
                counts[*k] += 1.0;
            }
        }
    }
    if (total == 0) {
        throw DataError("No land-cover pixel centres inside cell [{}, {}) x [{}, {})", cell.lat_min, cell.lat_max, cell.lon_min, cell.lon_max);
    }
    for (auto& v : counts) {
        v /= double(total);
    }
    return counts;
}

std::vector<std::optional<LandCoverFractions>> landcover_grid(const LandCoverRaster& raster, const GridSpec& grid)
{
    const auto& spec = raster.spec;
    std::vector<LandCoverFractions> counts(grid.cell_count(), LandCoverFractions{});
    std::vector<std::size_t> totals(grid.cell_count(), 0);
    for (int r = 0; r < spec.n_rows; ++r) {
        for (int c = 0; c < spec.n_cols; ++c) {
            const int code = raster.code_at(r, c);
            if (code == 0) {
                continue;
            }
            const auto cell = cell_index(spec.cell_centre(r, c), grid);
            if (!cell) {
                continue;
            }
            const auto idx = grid.flat_index(cell->row, cell->col);
            totals[idx] += 1;
            if (auto k = selected_class(code)) {
                counts[idx][*k] += 1.0;
            }
        }
    }
    std::vector<std::optional<LandCoverFractions>> out(grid.cell_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (totals[i] == 0) {
            continue;
        }
        auto f = counts[i];
        for (auto& v : f) {
            v /= double(totals[i]);
        }
        out[i] = f;
    }
    return out;
}

LandCoverRaster read_landcover_csv(const fs::path& csvPath)
{
    auto raster = LandCoverRaster::filled(read_grid_spec(sidecar_path(csvPath)), 0);
    CsvReader csv(csvPath);
    csv.require_columns({"row", "col", "class_code"});
    const auto cRow = csv.column("row");
    const auto cCol = csv.column("col");
    const auto cCode = csv.column("class_code");
    while (csv.next()) {
        const auto r = csv.get_int(cRow);
        const auto c = csv.get_int(cCol);
        const auto code = csv.get_int(cCode);
        if (r < 0 || r >= raster.spec.n_rows || c < 0 || c >= raster.spec.n_cols) {
            throw DataError("'{}' row {}: pixel ({}, {}) outside raster", csvPath.string(), csv.row_number(), r, c);
        }
        if (!is_valid_landcover_code(int(code))) {
            throw DataError("'{}' row {} column 'class_code': {} is not a land-cover nomenclature code", csvPath.string(), csv.row_number(), code);
        }
        raster.set(int(r), int(c), int(code));
    }
    return raster;
}

void write_landcover_csv(const LandCoverRaster& raster, const fs::path& csvPath)
{
    write_grid_spec(raster.spec, sidecar_path(csvPath));
    auto out = open_output(csvPath);
    out << "row,col,class_code\n";
    for (int r = 0; r < raster.spec.n_rows; ++r) {
        for (int c = 0; c < raster.spec.n_cols; ++c) {
            if (const int code = raster.code_at(r, c); code != 0) {
                out << r << ',' << c << ',' << code << '\n';
            }
        }
    }
}

std::vector<StationMeta> read_station_meta_csv(const fs::path& path)
{
    CsvReader csv(path);
    const auto cId = csv.column("station_id");
    const auto cLat = csv.column("lat");
    const auto cLon = csv.column("lon");
    const auto cAlt = csv.column("altitude_m");
    const auto cType = csv.column("station_type_code");

    std::vector<StationMeta> out;
    std::unordered_map<std::string, std::size_t> seen;
    while (csv.next()) {
        StationMeta m;
        m.station_id = csv.get_string(cId);
        m.location = GeoPoint{csv.get_double(cLat), csv.get_double(cLon), csv.get_double(cAlt)};
        const auto code = csv.get_int(cType);
        try {
            m.location.validate();
            m.station_type = station_type_from_code(code);
        } catch (const InvalidArgument& e) {
            throw DataError("'{}' row {}: {}", path.string(), csv.row_number(), e.what());
        }
        if (!seen.emplace(m.station_id, out.size()).second) {
            throw DataError("'{}' row {}: duplicate station_id '{}'", path.string(), csv.row_number(), m.station_id);
        }
        out.push_back(std::move(m));
    }
    return out;
}

void write_station_meta_csv(std::span<const StationMeta> stations, const fs::path& path)
{
    auto out = open_output(path);
    out << "station_id,lat,lon,altitude_m,station_type_code\n";
    for (const auto& s : stations) {
        out << s.station_id << ',' << format_double(s.location.latitude) << ',' << format_double(s.location.longitude) << ','
            << format_double(s.location.altitude) << ',' << station_type_code(s.station_type) << '\n';
    }
}

std::vector<StationSeries> read_station_series_csv(const fs::path& path, std::span<const StationMeta> stations)
{
    std::vector<StationSeries> out;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& m : stations) {
        index.emplace(m.station_id, out.size());
        out.push_back(StationSeries{m, {}});
    }

    CsvReader csv(path);
    const auto cId = csv.column("station_id");
    const auto cTime = csv.column("time_unix");
    const auto cValue = csv.column("value");
    while (csv.next()) {
        const auto id = csv.get_string(cId);
        auto it = index.find(id);
        if (it == index.end()) {
            throw DataError("'{}' row {}: station '{}' has no metadata", path.string(), csv.row_number(), id);
        }
        const auto t = csv.get_int(cTime);
        if (!Timestamp::is_valid_unix(t)) {
            throw DataError("'{}' row {} column 'time_unix': {} outside supported years", path.string(), csv.row_number(), t);
        }
        const double v = csv.get_double(cValue);
        if (v < 0.0) {
            throw DataError("'{}' row {} column 'value': negative concentration", path.string(), csv.row_number());
        }
        out[it->second].samples.push_back(ObservationSample{Timestamp::from_unix(t), v});
    }
    for (auto& s : out) {
        std::stable_sort(s.samples.begin(), s.samples.end(), [](auto& a, auto& b) { return a.time < b.time; });
        s.validate();
    }
    return out;
}

void write_station_series_csv(std::span<const StationSeries> series, const fs::path& path)
{
    auto out = open_output(path);
    out << "station_id,time_unix,value\n";
    for (const auto& s : series) {
        for (const auto& o : s.samples) {
            out << s.meta.station_id << ',' << o.time.unix_seconds() << ',' << format_double(o.value) << '\n';
        }
    }
}

}
