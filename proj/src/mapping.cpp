#include "aqf/mapping.hpp"
#include "aqf/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace aqf {

Raster Raster::empty(const GridSpec& spec)
{
    Raster r;
    r.spec = spec;
    r.cells.assign(spec.cell_count(), std::nullopt);
    return r;
}

Raster read_elevation_csv(const fs::path& csvPath)
{
    auto raster = Raster::empty(read_grid_spec(sidecar_path(csvPath)));
    CsvReader csv(csvPath);
    csv.require_columns({"row", "col", "altitude_m"});
    const auto cRow = csv.column("row");
    const auto cCol = csv.column("col");
    const auto cAlt = csv.column("altitude_m");
    while (csv.next()) {
        const auto r = csv.get_int(cRow);
        const auto c = csv.get_int(cCol);
        if (r < 0 || r >= raster.spec.n_rows || c < 0 || c >= raster.spec.n_cols) {
            throw DataError("'{}' row {}: cell ({}, {}) outside grid", csvPath.string(), csv.row_number(), r, c);
        }
        raster.set(int(r), int(c), csv.get_double(cAlt));
    }
    return raster;
}

void write_elevation_csv(const Raster& elevation, const fs::path& csvPath)
{
    write_grid_spec(elevation.spec, sidecar_path(csvPath));
    auto out = open_output(csvPath);
    out << "row,col,altitude_m\n";
    for (int r = 0; r < elevation.spec.n_rows; ++r) {
        for (int c = 0; c < elevation.spec.n_cols; ++c) {
            if (auto v = elevation.at(r, c)) {
                out << r << ',' << c << ',' << format_double(*v) << '\n';
            }
        }
    }
}

PredictionGrid prepare_prediction_grid(const GridSpec& spec, const LandCoverRaster& landcover, const Raster& elevation,
                                       StationType stationType)
{
    spec.validate();
    PredictionGrid grid;
    grid.spec = spec;
    grid.station_type = stationType;
    const auto lc = landcover_grid(landcover, spec);
    for (int r = 0; r < spec.n_rows; ++r) {
        for (int c = 0; c < spec.n_cols; ++c) {
            const auto idx = spec.flat_index(r, c);
            if (!lc[idx]) {
                continue;
            }
            GeoPoint centroid = spec.cell_centre(r, c);
            const auto elevCell = cell_index(centroid, elevation.spec);
            if (!elevCell) {
                continue;
            }
            const auto alt = elevation.at(elevCell->row, elevCell->col);
            if (!alt) {
                continue;
            }
            centroid.altitude = *alt;
            grid.cells.push_back(CellStatics{CellIndex{r, c}, centroid, *lc[idx]});
        }
    }
    return grid;
}

FeatureTable build_grid_rows(const PredictionGrid& grid, const GridField& field, const MeteoFieldSet& meteo,
                             std::vector<CellIndex>* cellsOut)
{
    if (!(field.spec == grid.spec)) {
        throw DataError("Satellite field grid does not match the prediction grid");
    }
    FeatureTable table;
    if (cellsOut) {
        cellsOut->clear();
    }
    if (!field.overpass_time) {
        return table;
    }
    const Timestamp t = *field.overpass_time;
    for (const auto& cell : grid.cells) {
        const auto idx = grid.spec.flat_index(cell.cell.row, cell.cell.col);
        if (!field.has_data(idx)) {
            continue;
        }
        const auto met = try_meteo_at(meteo, cell.centroid, t);
        if (!met) {
            continue;
        }
        FeatureRow row;
        fill_temporal_features(row, t);
        fill_station_features(row, StationMeta{fmt::format("cell_{}_{}", cell.cell.row, cell.cell.col), cell.centroid, grid.station_type});
        row[Feature::satellite_value] = field.mean[idx];
        fill_landcover_features(row, cell.landcover);
        fill_meteo_features(row, *met);
        table.rows.push_back(std::move(row));
        if (cellsOut) {
            cellsOut->push_back(cell.cell);
        }
    }
    if (!table.rows.empty()) {
        table.year = temporal_features(t).year;
    }
    return table;
}

FeatureTable build_grid_rows(const GridSpec& spec, const GridField& field, const MeteoFieldSet& meteo,
                             const LandCoverRaster& landcover, const Raster* elevation, StationType stationType)
{
    if (!elevation) {
        throw InvalidArgument("Grid prediction needs an elevation raster");
    }
    return build_grid_rows(prepare_prediction_grid(spec, landcover, *elevation, stationType), field, meteo);
}

PredictionLayer predict_layer(const ForestModel& model, const PredictionGrid& grid, const GridField& field,
                              const MeteoFieldSet& meteo, int threads)
{
    std::vector<CellIndex> cells;
    const auto rows = build_grid_rows(grid, field, meteo, &cells);
    PredictionLayer layer;
    layer.time = field.overpass_time.value_or(Timestamp());
    layer.raster = Raster::empty(grid.spec);
    if (rows.rows.empty()) {
        return layer;
    }
    const auto pred = predict(model, Dataset::from_table(rows, false), threads);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        layer.raster.set(cells[i].row, cells[i].col, pred[i]);
    }
    return layer;
}

Raster annual_mean(std::span<const PredictionLayer> layers)
{
    if (layers.empty()) {
        throw InvalidArgument("annual_mean needs at least one layer");
    }
    const GridSpec& spec = layers.front().raster.spec;
    std::vector<const PredictionLayer*> ordered;
    for (const auto& l : layers) {
        if (!(l.raster.spec == spec)) {
            throw DataError("Prediction layers do not share one grid spec");
        }
        ordered.push_back(&l);
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->time < b->time; });

    std::vector<double> sum(spec.cell_count(), 0.0);
    std::vector<std::size_t> count(spec.cell_count(), 0);
    for (const auto* l : ordered) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            if (const auto& v = l->raster.cells[i]) {
                sum[i] += *v;
                ++count[i];
            }
        }
    }
    Raster out = Raster::empty(spec);
    for (std::size_t i = 0; i < sum.size(); ++i) {
        if (count[i] > 0) {
            out.cells[i] = sum[i] / double(count[i]);
        }
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) {
        throw InvalidArgument("Quantile of an empty sample");
    }
    const double pos = (double(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - double(lo);
    if (frac == 0.0) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<MonthlyStats> monthly_stats(std::span<const TimedValue> values)
{
    std::map<int, std::vector<double>> byMonth;
    for (const auto& v : values) {
        byMonth[temporal_features(v.time).month].push_back(v.value);
    }
    std::vector<MonthlyStats> out;
    for (auto& [month, vals] : byMonth) {
        std::sort(vals.begin(), vals.end());
        MonthlyStats s;
        s.month = month;
        s.n = vals.size();
        s.min = vals.front();
        s.max = vals.back();
        s.q1 = quantile_sorted(vals, 0.25);
        s.median = quantile_sorted(vals, 0.5);
        s.q3 = quantile_sorted(vals, 0.75);
        double sum = 0.0;
        for (double v : vals) {
            sum += v;
        }
        s.mean = sum / double(vals.size());
        const double iqr = s.q3 - s.q1;
        const double loFence = s.q1 - 1.5 * iqr;
        const double hiFence = s.q3 + 1.5 * iqr;
        s.whisker_lo = *std::lower_bound(vals.begin(), vals.end(), loFence);
        s.whisker_hi = *(std::upper_bound(vals.begin(), vals.end(), hiFence) - 1);
        out.push_back(s);
    }
    return out;
}

std::vector<TimedValue> layer_values(std::span<const PredictionLayer> layers)
{
    std::vector<TimedValue> out;
    for (const auto& l : layers) {
        for (const auto& v : l.raster.cells) {
            if (v) {
                out.push_back(TimedValue{l.time, *v});
            }
        }
    }
    return out;
}

void write_monthly_stats_csv(std::span<const MonthlyStats> stats, const fs::path& path)
{
    auto out = open_output(path);
    out << "month,min,q1,median,q3,max,mean,whisker_lo,whisker_hi,n\n";
    for (const auto& s : stats) {
        out << s.month << ',' << format_double(s.min) << ',' << format_double(s.q1) << ',' << format_double(s.median) << ','
            << format_double(s.q3) << ',' << format_double(s.max) << ',' << format_double(s.mean) << ','
            << format_double(s.whisker_lo) << ',' << format_double(s.whisker_hi) << ',' << s.n << '\n';
    }
}

void write_ascii_grid(const Raster& raster, const fs::path& path)
{
    const auto& spec = raster.spec;
    auto out = open_output(path);
    out << "ncols " << spec.n_cols << '\n';
    out << "nrows " << spec.n_rows << '\n';
    out << "xllcorner " << format_double(spec.lon_min) << '\n';
    out << "yllcorner " << format_double(spec.lat_min) << '\n';
    out << "cellsize " << format_double(spec.cell_size) << '\n';
    out << "NODATA_value " << format_double(ascii_nodata) << '\n';
    for (int r = spec.n_rows - 1; r >= 0; --r) {
        for (int c = 0; c < spec.n_cols; ++c) {
            const auto v = raster.at(r, c);
            out << (c ? " " : "") << format_double(v ? *v : ascii_nodata);
        }
        out << '\n';
    }
}

Raster read_ascii_grid(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("Cannot open '{}' for reading", path.string());
    }
    std::map<std::string, std::string> header;
    std::string key;
    std::string value;
    for (int i = 0; i < 6; ++i) {
        if (!(in >> key >> value)) {
            throw DataError("'{}': truncated header", path.string());
        }
        for (auto& ch : key) {
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
        header[key] = value;
    }
    auto num = [&](const std::string& k) {
        auto it = header.find(k);
        if (it == header.end()) {
            throw DataError("'{}': header lacks '{}'", path.string(), k);
        }
        auto v = try_parse_double(it->second);
        if (!v) {
            throw DataError("'{}': header '{}' is not a number", path.string(), k);
        }
        return *v;
    };

    GridSpec spec;
    spec.n_cols = static_cast<int>(num("ncols"));
    spec.n_rows = static_cast<int>(num("nrows"));
    spec.lon_min = num("xllcorner");
    spec.lat_min = num("yllcorner");
    spec.cell_size = num("cellsize");
    const double nodata = num("nodata_value");
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw DataError("'{}': {}", path.string(), e.what());
    }

    Raster raster = Raster::empty(spec);
    std::string token;
    for (int r = spec.n_rows - 1; r >= 0; --r) {
        for (int c = 0; c < spec.n_cols; ++c) {
            if (!(in >> token)) {
                throw DataError("'{}': expected {} values", path.string(), spec.cell_count());
            }
            auto v = try_parse_double(token);
            if (!v) {
                throw DataError("'{}': bad value '{}'", path.string(), token);
            }
            if (*v != nodata) {
                raster.set(r, c, *v);
            }
        }
    }
    return raster;
}

void write_prediction_layer(const PredictionLayer& layer, const fs::path& csvPath)
{
    GridField f = GridField::empty(layer.raster.spec, "prediction");
    f.overpass_time = layer.time;
    for (std::size_t i = 0; i < f.mean.size(); ++i) {
        if (const auto& v = layer.raster.cells[i]) {
            f.mean[i] = *v;
            f.count[i] = 1;
        }
    }
    write_grid_field(f, csvPath);
}

PredictionLayer read_prediction_layer(const fs::path& csvPath)
{
    const auto f = read_grid_field(csvPath);
    if (!f.overpass_time) {
        throw DataError("'{}': prediction layer lacks time_unix", sidecar_path(csvPath).string());
    }
    PredictionLayer layer;
    layer.time = *f.overpass_time;
    layer.raster = Raster::empty(f.spec);
    for (std::size_t i = 0; i < f.mean.size(); ++i) {
        if (f.count[i] > 0) {
            layer.raster.cells[i] = f.mean[i];
        }
    }
    return layer;
}

}
