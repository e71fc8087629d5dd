#include "aqf/regrid.hpp"
#include "aqf/error.hpp"
#include "aqf/parallel.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

namespace aqf {

void GridSpec::validate() const
{
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw InvalidArgument("Grid cell size must be positive, got {}", cell_size);
    }
    if (n_rows <= 0 || n_cols <= 0) {
        throw InvalidArgument("Grid must have at least one row and column, got {}x{}", n_rows, n_cols);
    }
    if (!std::isfinite(lat_min) || !std::isfinite(lon_min) || lat_min < -90.0 || lon_min < -180.0) {
        throw InvalidArgument("Grid origin ({}, {}) outside geographic bounds", lat_min, lon_min);
    }
    // Small slack so that extents such as 36 + 200 * 0.03 are not rejected by rounding.
    const double slack = 1e-9 * cell_size;
    if (lat_max() > 90.0 + slack || lon_max() > 180.0 + slack) {
        throw InvalidArgument("Grid extent ({}, {}) exceeds geographic bounds", lat_max(), lon_max());
    }
}

GeoPoint GridSpec::cell_centre(int row, int col) const noexcept
{
    return GeoPoint{lat_min + (row + 0.5) * cell_size, lon_min + (col + 0.5) * cell_size, 0.0};
}

GridSpec GridSpec::with_cell_size(double cellSize) const
{
    GridSpec out = *this;
    out.cell_size = cellSize;
    out.n_rows = static_cast<int>(std::ceil(n_rows * cell_size / cellSize - 1e-9));
    out.n_cols = static_cast<int>(std::ceil(n_cols * cell_size / cellSize - 1e-9));
    out.validate();
    return out;
}

KeyValues GridSpec::to_key_values() const
{
    KeyValues kv;
    kv.set("lat_min", lat_min);
    kv.set("lon_min", lon_min);
    kv.set("cell_size", cell_size);
    kv.set("n_rows", std::int64_t(n_rows));
    kv.set("n_cols", std::int64_t(n_cols));
    return kv;
}

GridSpec GridSpec::from_key_values(const KeyValues& kv)
{
    GridSpec spec;
    spec.lat_min = kv.get_double("lat_min");
    spec.lon_min = kv.get_double("lon_min");
    spec.cell_size = kv.get_double("cell_size");
    spec.n_rows = static_cast<int>(kv.get_int("n_rows"));
    spec.n_cols = static_cast<int>(kv.get_int("n_cols"));
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }
    return spec;
}

std::optional<CellIndex> cell_index(const GeoPoint& p, const GridSpec& spec) noexcept
{
    const double r = std::floor((p.latitude - spec.lat_min) / spec.cell_size);
    const double c = std::floor((p.longitude - spec.lon_min) / spec.cell_size);
    if (!(r >= 0.0 && r < spec.n_rows && c >= 0.0 && c < spec.n_cols)) {
        return std::nullopt;
    }
    return CellIndex{static_cast<int>(r), static_cast<int>(c)};
}

GridField GridField::empty(const GridSpec& spec, std::string variable)
{
    GridField f;
    f.spec = spec;
    f.mean.assign(spec.cell_count(), 0.0);
    f.count.assign(spec.cell_count(), 0);
    f.variable = std::move(variable);
    return f;
}

std::optional<double> GridField::value_at(CellIndex c) const noexcept
{
    const auto idx = spec.flat_index(c.row, c.col);
    if (count[idx] == 0) {
        return std::nullopt;
    }
    return mean[idx];
}

namespace {

std::int64_t lower_median(std::vector<std::int64_t>& values)
{
    auto mid = values.begin() + (values.size() - 1) / 2;
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

}

GridField bin_swath(std::span<const SwathSample> samples, const GridSpec& spec, double qaThreshold, std::string variable, int threads)
{
    spec.validate();
    if (!(qaThreshold >= 0.0 && qaThreshold <= 1.0)) {
        throw InvalidArgument("QA threshold {} outside [0, 1]", qaThreshold);
    }

    // Cell of every accepted sample, computed in parallel over samples.
    constexpr std::size_t rejected = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> cellOf(samples.size(), rejected);
    const std::size_t chunks = std::clamp<std::size_t>(std::size_t(std::max(threads, 1)), 1, std::max<std::size_t>(samples.size(), 1));
    parallel_for(chunks, threads, [&](std::size_t p) {
        const std::size_t begin = samples.size() * p / chunks;
        const std::size_t end = samples.size() * (p + 1) / chunks;
        for (std::size_t k = begin; k < end; ++k) {
            const auto& smp = samples[k];
            if (!(smp.qa >= qaThreshold)) {
                continue;
            }
            if (auto cell = cell_index(smp.location, spec)) {
                cellOf[k] = spec.flat_index(cell->row, cell->col);
            }
        }
    });

    // Each band of cells sums its samples in input order, so the result
    // does not depend on the thread count.
    GridField field = GridField::empty(spec, std::move(variable));
    const std::size_t bands = std::clamp<std::size_t>(std::size_t(std::max(threads, 1)), 1, spec.cell_count());
    parallel_for(bands, threads, [&](std::size_t b) {
        const std::size_t lo = spec.cell_count() * b / bands;
        const std::size_t hi = spec.cell_count() * (b + 1) / bands;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const auto idx = cellOf[k];
            if (idx >= lo && idx < hi) {
                field.mean[idx] += samples[k].value;
                field.count[idx] += 1;
            }
        }
    });
    for (std::size_t i = 0; i < field.mean.size(); ++i) {
        field.mean[i] = field.count[i] > 0 ? field.mean[i] / field.count[i] : 0.0;
    }

    std::vector<std::int64_t> times;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (cellOf[k] != rejected) {
            times.push_back(samples[k].time.unix_seconds());
        }
    }
    if (times.empty()) {
        for (const auto& s : samples) {
            times.push_back(s.time.unix_seconds());
        }
    }
    if (!times.empty()) {
        field.overpass_time = Timestamp::from_unix(lower_median(times));
    }
    return field;
}

std::vector<SwathSample> read_swath_csv(const fs::path& path)
{
    CsvReader csv(path);
    const auto cLat = csv.column("lat");
    const auto cLon = csv.column("lon");
    const auto cValue = csv.column("value");
    const auto cQa = csv.column("qa");
    const auto cTime = csv.column("time_unix");

    std::vector<SwathSample> out;
    while (csv.next()) {
        SwathSample s;
        s.location.latitude = csv.get_double(cLat);
        s.location.longitude = csv.get_double(cLon);
        s.value = csv.get_double(cValue);
        s.qa = csv.get_double(cQa);
        const auto t = csv.get_int(cTime);
        try {
            s.location.validate();
            s.time = Timestamp::from_unix(t);
        } catch (const InvalidArgument& e) {
            throw DataError("'{}' row {}: {}", path.string(), csv.row_number(), e.what());
        }
        if (s.qa < 0.0 || s.qa > 1.0) {
            throw DataError("'{}' row {} column 'qa': {} outside [0, 1]", path.string(), csv.row_number(), s.qa);
        }
        out.push_back(s);
    }
    return out;
}

void write_swath_csv(std::span<const SwathSample> samples, const fs::path& path)
{
    auto out = open_output(path);
    out << "lat,lon,value,qa,time_unix\n";
    for (const auto& s : samples) {
        out << format_double(s.location.latitude) << ',' << format_double(s.location.longitude) << ','
            << format_double(s.value) << ',' << format_double(s.qa) << ',' << s.time.unix_seconds() << '\n';
    }
}

GridSpec read_grid_spec(const fs::path& path)
{
    return GridSpec::from_key_values(KeyValues::read(path));
}

void write_grid_spec(const GridSpec& spec, const fs::path& path)
{
    auto out = open_output(path);
    out << spec.to_key_values().to_line() << '\n';
}

fs::path sidecar_path(const fs::path& csvPath)
{
    auto p = csvPath;
    p.replace_extension(".spec");
    return p;
}

void write_grid_field(const GridField& field, const fs::path& csvPath)
{
    auto kv = field.spec.to_key_values();
    if (field.overpass_time) {
        kv.set("time_unix", field.overpass_time->unix_seconds());
    }
    if (!field.variable.empty()) {
        kv.set("variable", field.variable);
    }
    {
        auto side = open_output(sidecar_path(csvPath));
        side << kv.to_line() << '\n';
    }

    auto out = open_output(csvPath);
    out << "row,col,value,count\n";
    for (int r = 0; r < field.spec.n_rows; ++r) {
        for (int c = 0; c < field.spec.n_cols; ++c) {
            const auto idx = field.spec.flat_index(r, c);
            if (field.count[idx] > 0) {
                out << r << ',' << c << ',' << format_double(field.mean[idx]) << ',' << field.count[idx] << '\n';
            }
        }
    }
}

GridField read_grid_field(const fs::path& csvPath)
{
    const auto kv = KeyValues::read(sidecar_path(csvPath));
    GridField field = GridField::empty(GridSpec::from_key_values(kv), kv.has("variable") ? kv.get("variable") : std::string());
    if (kv.has("time_unix")) {
        const auto t = kv.get_int("time_unix");
        if (!Timestamp::is_valid_unix(t)) {
            throw DataError("'{}': time_unix {} outside supported years", sidecar_path(csvPath).string(), t);
        }
        field.overpass_time = Timestamp::from_unix(t);
    }

    CsvReader csv(csvPath);
    csv.require_columns({"row", "col", "value", "count"});
    const auto cRow = csv.column("row");
    const auto cCol = csv.column("col");
    const auto cValue = csv.column("value");
    const auto cCount = csv.column("count");
    while (csv.next()) {
        const auto r = csv.get_int(cRow);
        const auto c = csv.get_int(cCol);
        if (r < 0 || r >= field.spec.n_rows || c < 0 || c >= field.spec.n_cols) {
            throw DataError("'{}' row {}: cell ({}, {}) outside grid", csvPath.string(), csv.row_number(), r, c);
        }
        const auto n = csv.get_int(cCount);
        if (n <= 0) {
            throw DataError("'{}' row {} column 'count': must be positive", csvPath.string(), csv.row_number());
        }
        const auto idx = field.spec.flat_index(int(r), int(c));
        field.mean[idx] = csv.get_double(cValue);
        field.count[idx] = static_cast<std::uint32_t>(n);
    }
    return field;
}

}
