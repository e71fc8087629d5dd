#include "aqf/synth.hpp"
#include "aqf/error.hpp"
#include "aqf/join.hpp"
#include "aqf/mapping.hpp"
#include "aqf/regrid.hpp"
#include "aqf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aqf::synth {

namespace {

std::vector<std::string> numbered_names(std::string_view prefix, std::size_t first, std::size_t count)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(fmt::format("{}{}", prefix, first + i));
    }
    return out;
}

}

Dataset smooth_suite(std::size_t n, std::uint64_t seed, double noiseSd, std::size_t noiseFeatures)
{
    Rng rng(seed);
    std::vector<std::vector<double>> cols(2 + noiseFeatures, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        cols[0][i] = rng.uniform(-3.0, 3.0);
        cols[1][i] = rng.uniform(-2.0, 2.0);
        for (std::size_t f = 0; f < noiseFeatures; ++f) {
            cols[2 + f][i] = rng.uniform01();
        }
        y[i] = 10.0 * std::sin(cols[0][i]) + cols[1][i] * cols[1][i] + rng.normal(0.0, noiseSd);
    }
    return Dataset::from_columns(numbered_names("x", 0, cols.size()), cols, std::move(y));
}

Dataset importance_suite(std::size_t n, std::uint64_t seed, std::size_t noiseFeatures)
{
    Rng rng(seed);
    std::vector<std::vector<double>> cols(1 + noiseFeatures, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& c : cols) {
            c[i] = rng.uniform(0.0, 10.0);
        }
        y[i] = cols[0][i];
    }
    return Dataset::from_columns(numbered_names("x", 0, cols.size()), cols, std::move(y));
}

Dataset step_suite(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<std::vector<double>> cols(1, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        cols[0][i] = rng.uniform(-5.0, 5.0);
        y[i] = cols[0][i] < 0.0 ? 0.0 : 10.0;
    }
    return Dataset::from_columns({"x0"}, cols, std::move(y));
}

Dataset noise_suite(std::size_t n, std::uint64_t seed, std::size_t features)
{
    Rng rng(seed);
    std::vector<std::vector<double>> cols(features, std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& c : cols) {
            c[i] = rng.uniform01();
        }
        y[i] = rng.normal(10.0, 3.0);
    }
    return Dataset::from_columns(numbered_names("x", 0, features), cols, std::move(y));
}

StationSuite station_effect_suite(std::size_t stationCount, std::size_t rowsPerStation, double offsetSd, std::uint64_t seed,
                                  double noiseSd)
{
    Rng rng(seed);
    StationSuite suite;
    std::vector<double> offsets;
    for (std::size_t s = 0; s < stationCount; ++s) {
        StationMeta m;
        m.station_id = fmt::format("S{:03}", s);
        m.location = GeoPoint{rng.uniform(36.0, 43.5), rng.uniform(-9.5, 3.0), rng.uniform(0.0, 1500.0)};
        m.station_type = station_type_from_code(std::int64_t(1 + rng.uniform_index(3)));
        suite.stations.push_back(m);
        offsets.push_back(rng.normal(0.0, offsetSd));
    }

    const std::size_t n = stationCount * rowsPerStation;
    std::vector<std::vector<double>> cols(6, std::vector<double>(n));
    std::vector<double> y(n);
    std::vector<std::string> groups(n);
    std::size_t i = 0;
    for (std::size_t s = 0; s < stationCount; ++s) {
        for (std::size_t r = 0; r < rowsPerStation; ++r, ++i) {
            cols[0][i] = suite.stations[s].location.latitude;
            cols[1][i] = suite.stations[s].location.longitude;
            cols[2][i] = rng.uniform(-3.0, 3.0);
            cols[3][i] = rng.uniform(-2.0, 2.0);
            cols[4][i] = rng.uniform01();
            cols[5][i] = rng.uniform01();
            y[i] = 10.0 * std::sin(cols[2][i]) + cols[3][i] * cols[3][i] + offsets[s] + rng.normal(0.0, noiseSd);
            groups[i] = suite.stations[s].station_id;
        }
    }
    suite.data = Dataset::from_columns({"latitude", "longitude", "x0", "x1", "n0", "n1"}, cols, std::move(y));
    suite.data.groups = std::move(groups);
    return suite;
}

namespace {

constexpr double s_gridLat = 40.0;
constexpr double s_gridLon = -4.0;

struct World
{
    GridSpec grid;
    double centreLat = 0.0;
    double centreLon = 0.0;
    double roadLat = 0.0;

    double emission(double lat, double lon) const
    {
        const double d = std::hypot(lat - centreLat, lon - centreLon);
        const double road = std::exp(-std::pow((lat - roadLat) / 0.01, 2.0));
        return 0.2 + std::exp(-std::pow(d / 0.08, 2.0)) + 0.5 * road;
    }

    int landcover(double lat, double lon) const
    {
        const double d = std::hypot(lat - centreLat, lon - centreLon);
        if (std::abs(lat - roadLat) < 0.004) {
            return 122;
        }
        if (d < 0.04) {
            return 111;
        }
        if (d < 0.09) {
            return 112;
        }
        if (lat < centreLat - 0.06 && lon > centreLon + 0.06) {
            return 121;
        }
        if (std::hypot(lat - (centreLat + 0.12), lon - (centreLon + 0.12)) < 0.03) {
            return 124;
        }
        if (lat > centreLat + 0.05 && lon < centreLon - 0.03) {
            return 311;
        }
        return 211;
    }

    double elevation(double lat, double lon) const
    {
        return 600.0 + 400.0 * (lat - s_gridLat) + 80.0 * std::sin(20.0 * (lon - s_gridLon));
    }
};

double day_factor(int day)
{
    // weekday/weekend cycle plus a slow drift
    const int dow = day % 7;
    return (dow >= 5 ? 0.7 : 1.0) * (1.0 + 0.15 * std::sin(2.0 * std::numbers::pi * day / 23.0));
}

}

void write_scenario(const fs::path& dir, const ScenarioOptions& opt)
{
    if (opt.stations == 0 || opt.days <= 0 || opt.grid_cells <= 0 || !(opt.landcover_pixel > 0.0)) {
        throw InvalidArgument("Scenario needs stations, days, grid cells and a positive land-cover pixel size");
    }
    Rng rng(opt.seed);
    World w;
    w.grid = GridSpec{s_gridLat, s_gridLon, GridSpec::default_cell_size, opt.grid_cells, opt.grid_cells};
    w.grid.validate();
    const double span = opt.grid_cells * w.grid.cell_size;
    w.centreLat = s_gridLat + span / 2.0;
    w.centreLon = s_gridLon + span / 2.0;
    w.roadLat = s_gridLat + span * 0.3;

    fs::create_directories(dir);
    write_grid_spec(w.grid, dir / "grid.spec");

    // Land cover on a fine pixel grid covering the study grid.
    {
        const int nPix = static_cast<int>(std::ceil(span / opt.landcover_pixel - 1e-9));
        auto lc = LandCoverRaster::filled(GridSpec{s_gridLat, s_gridLon, opt.landcover_pixel, nPix, nPix}, 0);
        for (int r = 0; r < nPix; ++r) {
            for (int c = 0; c < nPix; ++c) {
                const auto p = lc.spec.cell_centre(r, c);
                lc.set(r, c, w.landcover(p.latitude, p.longitude));
            }
        }
        write_landcover_csv(lc, dir / "landcover.csv");
    }

    {
        auto elev = Raster::empty(w.grid);
        for (int r = 0; r < w.grid.n_rows; ++r) {
            for (int c = 0; c < w.grid.n_cols; ++c) {
                const auto p = w.grid.cell_centre(r, c);
                elev.set(r, c, std::round(w.elevation(p.latitude, p.longitude) * 10.0) / 10.0);
            }
        }
        write_elevation_csv(elev, dir / "elevation.csv");
    }

    // Hourly meteorology on a 0.25 degree lattice enclosing the grid.
    const double step = MeteoFieldSet::default_cell_size;
    const int nodes = static_cast<int>(std::ceil((span + step / 2.0) / step)) + 1;
    const GridSpec lattice{s_gridLat - step / 2.0, s_gridLon - step / 2.0, step, nodes, nodes};
    const Timestamp start = Timestamp::from_civil(opt.year, unsigned(opt.start_month), 1);
    MeteoFieldSet meteo(lattice, start, opt.days * 24);
    for (int h = 0; h < meteo.hour_count(); ++h) {
        const int day = h / 24;
        const double diurnal = std::sin(2.0 * std::numbers::pi * ((h % 24) - 9) / 24.0);
        const double daylight = std::max(diurnal, 0.0);
        const double synoptic = std::sin(2.0 * std::numbers::pi * day / 9.0);
        for (int r = 0; r < nodes; ++r) {
            for (int c = 0; c < nodes; ++c) {
                const double temp = 281.0 + 3.0 * synoptic + 7.0 * diurnal + 0.4 * r - 0.3 * c + rng.normal(0.0, 0.3);
                const double u = 3.0 * std::sin(2.0 * std::numbers::pi * day / 5.0) + 0.3 * c + rng.normal(0.0, 0.5);
                const double v = 2.0 * std::cos(2.0 * std::numbers::pi * day / 3.0) + rng.normal(0.0, 0.5);
                meteo.at(MeteoVariable::temp_2m, h, r, c) = temp;
                meteo.at(MeteoVariable::dewpoint_2m, h, r, c) = temp - 4.0 - 2.0 * daylight;
                meteo.at(MeteoVariable::wind_u10, h, r, c) = u;
                meteo.at(MeteoVariable::wind_v10, h, r, c) = v;
                meteo.at(MeteoVariable::ssrd, h, r, c) = 2.4e6 * daylight * (1.0 - 0.3 * std::max(synoptic, 0.0));
                meteo.at(MeteoVariable::evaporation, h, r, c) = -1e-5 - 1.2e-4 * daylight;
                meteo.at(MeteoVariable::precip_total, h, r, c) = (day % 6 == 0 && h % 24 > 12) ? 4e-4 : 0.0;
                meteo.at(MeteoVariable::blh, h, r, c) = 250.0 + 1100.0 * daylight + 60.0 * std::hypot(u, v);
                meteo.at(MeteoVariable::surface_pressure, h, r, c) = 94000.0 + 300.0 * synoptic - 20.0 * r;
            }
        }
    }
    write_meteo_dir(meteo, dir / "meteo");

    // Stations with hourly observations.
    std::vector<StationSeries> stations;
    for (std::size_t s = 0; s < opt.stations; ++s) {
        StationSeries series;
        auto& m = series.meta;
        m.station_id = fmt::format("ST{:03}", s);
        const double lat = s_gridLat + rng.uniform(0.02, 0.98) * span;
        const double lon = s_gridLon + rng.uniform(0.02, 0.98) * span;
        m.location = GeoPoint{std::round(lat * 1e5) / 1e5, std::round(lon * 1e5) / 1e5,
                              std::round(w.elevation(lat, lon) + rng.normal(0.0, 15.0))};
        m.station_type = station_type_from_code(std::int64_t(1 + rng.uniform_index(3)));
        stations.push_back(std::move(series));
    }
    for (auto& series : stations) {
        const auto& m = series.meta;
        const double offset = rng.normal(0.0, opt.station_effect_sd);
        const double typeFactor = m.station_type == StationType::Traffic ? 1.5 : m.station_type == StationType::Industrial ? 1.2 : 0.8;
        const double e = w.emission(m.location.latitude, m.location.longitude);
        for (int h = 0; h < meteo.hour_count(); ++h) {
            const bool missing = rng.uniform01() < 0.03;
            const double noise = rng.normal(0.0, 1.5);
            if (missing) {
                continue;
            }
            const Timestamp t = Timestamp::from_unix(start.unix_seconds() + std::int64_t(h) * 3600);
            const auto met = meteo_at(meteo, m.location, t);
            const double dilution = 900.0 / (met[MeteoVariable::blh] + 200.0);
            double c = 4.0 + offset + opt.target_shift + 22.0 * e * day_factor(h / 24) * dilution * typeFactor
                     - 0.6 * met.wind_speed + noise;
            series.samples.push_back(ObservationSample{t, std::max(0.0, std::round(c * 100.0) / 100.0)});
        }
    }
    {
        std::vector<StationMeta> metas;
        for (const auto& s : stations) {
            metas.push_back(s.meta);
        }
        write_station_meta_csv(metas, dir / "stations.csv");
        write_station_series_csv(stations, dir / "observations.csv");
    }

    // One swath per day around 13 UTC; some days have a cloudy band.
    const std::size_t samplesPerSwath = std::size_t(opt.grid_cells) * std::size_t(opt.grid_cells) * 3;
    for (int day = 0; day < opt.days; ++day) {
        const auto overpass = start.unix_seconds() + std::int64_t(day) * 86400 + 13 * 3600 + std::int64_t(rng.uniform_index(3600));
        const bool cloudy = day % 4 == 0;
        const double cloudLo = s_gridLat + rng.uniform01() * span * 0.6;
        std::vector<SwathSample> swath;
        swath.reserve(samplesPerSwath);
        for (std::size_t i = 0; i < samplesPerSwath; ++i) {
            SwathSample s;
            s.location = GeoPoint{s_gridLat - 0.01 + rng.uniform01() * (span + 0.02),
                                  s_gridLon - 0.01 + rng.uniform01() * (span + 0.02), 0.0};
            s.time = Timestamp::from_unix(overpass + std::int64_t(i * 8 / samplesPerSwath));
            const double inCloud = cloudy && s.location.latitude > cloudLo && s.location.latitude < cloudLo + span * 0.3;
            s.qa = inCloud ? rng.uniform(0.2, 0.7) : rng.uniform(0.7, 1.0);
            const auto met = try_meteo_at(meteo, s.location, s.time);
            const double blh = met ? (*met)[MeteoVariable::blh] : 1000.0;
            const double column = 4e-5 * w.emission(s.location.latitude, s.location.longitude) * day_factor(day)
                                * (1.0 + 400.0 / (blh + 200.0)) * (1.0 + rng.normal(0.0, 0.1));
            s.value = column;
            swath.push_back(s);
        }
        auto date = Timestamp::from_unix(overpass).to_iso().substr(0, 10);
        std::erase(date, '-');
        write_swath_csv(swath, dir / "swaths" / fmt::format("swath_{}.csv", date));
    }
}

}
