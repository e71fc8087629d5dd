#pragma once

#include "aqf/core.hpp"
#include "aqf/forest.hpp"
#include "aqf/textio.hpp"

#include <cstdint>
#include <vector>

namespace aqf::synth {

/// y = 10 sin(x0) + x1^2 + e, e ~ N(0, noiseSd); x0 ~ U(-3, 3), x1 ~ U(-2, 2),
/// plus `noiseFeatures` independent U(0, 1) columns.
Dataset smooth_suite(std::size_t n, std::uint64_t seed, double noiseSd = 0.5, std::size_t noiseFeatures = 4);

/// y = x0 exactly with x0 ~ U(0, 10) and `noiseFeatures` U(0, 10) columns.
Dataset importance_suite(std::size_t n, std::uint64_t seed, std::size_t noiseFeatures = 5);

/// Step function y = 0 for x < 0, 10 for x >= 0 with x ~ U(-5, 5).
Dataset step_suite(std::size_t n, std::uint64_t seed);

/// Pure noise target independent of every feature.
Dataset noise_suite(std::size_t n, std::uint64_t seed, std::size_t features = 6);

struct StationSuite
{
    Dataset data;
    std::vector<StationMeta> stations;
};

/// Smooth-suite signal plus a per-station offset ~ N(0, offsetSd). Features are
/// the station latitude/longitude, x0, x1 and two noise columns; rows are
/// grouped by station id.
StationSuite station_effect_suite(std::size_t stationCount, std::size_t rowsPerStation, double offsetSd, std::uint64_t seed,
                                  double noiseSd = 0.5);

struct ScenarioOptions
{
    std::uint64_t seed = 7;
    std::size_t stations = 25;
    int days = 45;
    int year = 2019;
    int start_month = 1;
    int grid_cells = 12;          // per side, 0.03 degree cells
    double landcover_pixel = 0.001; // degrees, about 100 m
    double station_effect_sd = 2.0;
    double target_shift = 0.0;    // added to every observation
};

/// Writes a complete set of raw interchange inputs under `dir`:
///   grid.spec, swaths/swath_<YYYYMMDD>.csv, stations.csv, observations.csv,
///   meteo/<variable>.csv + meteo/meteo.spec, landcover.csv + landcover.spec,
///   elevation.csv + elevation.spec.
/// Identical options produce byte-identical files.
void write_scenario(const fs::path& dir, const ScenarioOptions& options);

}
