#pragma once

// Test-only helpers: independent oracles and small fixtures.

#include "aqf/dataset.hpp"
#include "aqf/forest.hpp"
#include "aqf/join.hpp"
#include "aqf/regrid.hpp"
#include "aqf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing {

namespace fs = std::filesystem;

class TempDir
{
public:
    TempDir()
    {
        static int counter = 0;
        aqf::Rng rng(std::uint64_t(::getpid()) * 7919u + std::uint64_t(++counter));
        _path = fs::temp_directory_path() / ("aqf_test_" + std::to_string(rng.next_u64() % 1000000000u));
        fs::create_directories(_path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return _path; }
    fs::path operator/(const std::string& s) const { return _path / s; }

private:
    fs::path _path;
};

inline std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline bool rel_close(double a, double b, double rel, double absFloor = 1e-12)
{
    return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), absFloor);
}

// Calendar oracle: plain day counting from 1970-01-01 (a Thursday).
struct CivilOracle
{
    int year, month, day, hour, minute, second;
    int day_of_year;
    int iso_weekday;
};

inline bool oracle_leap(int y)
{
    if (y % 400 == 0) {
        return true;
    }
    if (y % 100 == 0) {
        return false;
    }
    return y % 4 == 0;
}

inline CivilOracle civil_from_unix(std::int64_t s)
{
    CivilOracle c{};
    std::int64_t days = s / 86400;
    std::int64_t rem = s % 86400;
    c.hour = int(rem / 3600);
    c.minute = int(rem % 3600 / 60);
    c.second = int(rem % 60);
    c.iso_weekday = int((days + 3) % 7) + 1; // 1970-01-01 was ISO day 4
    int y = 1970;
    while (days >= (oracle_leap(y) ? 366 : 365)) {
        days -= oracle_leap(y) ? 366 : 365;
        ++y;
    }
    c.year = y;
    c.day_of_year = int(days) + 1;
    const int lengths[12] = {31, oracle_leap(y) ? 29 : 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int m = 0;
    while (days >= lengths[m]) {
        days -= lengths[m];
        ++m;
    }
    c.month = m + 1;
    c.day = int(days) + 1;
    return c;
}

// Direct bilinear formula on a unit square with corner values
// f00 (south-west), f01 (south-east), f10 (north-west), f11 (north-east).
inline double bilinear(double f00, double f01, double f10, double f11, double fy, double fx)
{
    return f00 * (1 - fx) * (1 - fy) + f01 * fx * (1 - fy) + f10 * (1 - fx) * fy + f11 * fx * fy;
}

// Exhaustive CART oracle: every feature, every midpoint, children SSE by
// explicit two-pass sums. Ties within 1e-12 of the parent SSE go to the
// earlier (feature, threshold) candidate.
struct OracleNode
{
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::size_t n = 0;
};

inline double oracle_sse(const std::vector<double>& y)
{
    if (y.empty()) {
        return 0.0;
    }
    double m = 0.0;
    for (double v : y) {
        m += v;
    }
    m /= double(y.size());
    double s = 0.0;
    for (double v : y) {
        s += (v - m) * (v - m);
    }
    return s;
}

inline void oracle_grow(const std::vector<std::vector<double>>& x, const std::vector<double>& y, std::vector<std::size_t> rows,
                        std::size_t minSplit, std::size_t minLeaf, std::vector<OracleNode>& out)
{
    std::sort(rows.begin(), rows.end());
    OracleNode node;
    node.n = rows.size();
    double sum = 0.0;
    for (auto r : rows) {
        sum += y[r];
    }
    node.value = sum / double(rows.size());

    std::vector<double> ys;
    for (auto r : rows) {
        ys.push_back(y[r]);
    }
    const double parent = oracle_sse(ys);
    const bool pure = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys.front(); });

    int bestF = -1;
    double bestT = 0.0;
    double best = 0.0;
    if (!pure && rows.size() >= minSplit) {
        const double tol = 1e-12 * parent;
        for (std::size_t f = 0; f < x.size(); ++f) {
            std::vector<double> vals;
            for (auto r : rows) {
                vals.push_back(x[f][r]);
            }
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                double t = (vals[i] + vals[i + 1]) / 2.0;
                if (!(t < vals[i + 1])) {
                    t = vals[i];
                }
                std::vector<double> l, r;
                for (auto row : rows) {
                    (x[f][row] <= t ? l : r).push_back(y[row]);
                }
                if (l.size() < minLeaf || r.size() < minLeaf) {
                    continue;
                }
                const double d = parent - oracle_sse(l) - oracle_sse(r);
                if (d > best + tol) {
                    best = d;
                    bestF = int(f);
                    bestT = t;
                }
            }
        }
    }
    if (bestF < 0) {
        out.push_back(node);
        return;
    }
    node.feature = bestF;
    node.threshold = bestT;
    out.push_back(node);
    std::vector<std::size_t> l, r;
    for (auto row : rows) {
        (x[std::size_t(bestF)][row] <= bestT ? l : r).push_back(row);
    }
    oracle_grow(x, y, l, minSplit, minLeaf, out);
    oracle_grow(x, y, r, minSplit, minLeaf, out);
}

inline std::vector<OracleNode> oracle_cart(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                           std::size_t minSplit = 2, std::size_t minLeaf = 1)
{
    std::vector<std::size_t> rows(y.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = i;
    }
    std::vector<OracleNode> out;
    oracle_grow(x, y, rows, minSplit, minLeaf, out);
    return out;
}

inline bool tree_matches_oracle(const aqf::RegressionTree& tree, const std::vector<OracleNode>& oracle)
{
    if (tree.nodes.size() != oracle.size()) {
        return false;
    }
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        const auto& a = tree.nodes[i];
        const auto& b = oracle[i];
        if (a.feature != b.feature || a.n_samples != b.n) {
            return false;
        }
        if (a.is_leaf() ? a.value != b.value : a.threshold != b.threshold) {
            return false;
        }
    }
    return true;
}

struct RandomTable
{
    std::vector<std::vector<double>> x;
    std::vector<double> y;
};

// Small tables with repeated feature values and, on odd seeds, integer targets
// so that exact ties occur.
inline RandomTable random_small_table(std::uint64_t seed)
{
    aqf::Rng rng(seed);
    const std::size_t n = 2 + rng.uniform_index(19);
    const std::size_t p = 1 + rng.uniform_index(4);
    RandomTable t;
    t.x.assign(p, std::vector<double>(n));
    t.y.resize(n);
    const bool discrete = seed % 2 == 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < p; ++f) {
            t.x[f][i] = discrete ? double(rng.uniform_index(6)) : rng.uniform(-5.0, 5.0);
        }
        t.y[i] = discrete ? double(rng.uniform_index(10)) : rng.normal(0.0, 3.0);
    }
    return t;
}

inline aqf::Dataset dataset_of(const RandomTable& t)
{
    std::vector<std::string> names;
    for (std::size_t f = 0; f < t.x.size(); ++f) {
        names.push_back("f" + std::to_string(f));
    }
    return aqf::Dataset::from_columns(names, t.x, t.y);
}

// Small in-memory world: 2x2 study grid at (40, -4), meteo lattice around it,
// uniform land cover.
struct MiniWorld
{
    aqf::GridSpec grid{40.0, -4.0, 0.03, 2, 2};
    aqf::Timestamp start = aqf::Timestamp::from_civil(2019, 1, 1);
    aqf::MeteoFieldSet meteo;
    aqf::LandCoverRaster landcover;

    explicit MiniWorld(int landcoverCode = 111)
    : meteo(aqf::GridSpec{39.75, -4.25, 0.25, 3, 3}, start, 72)
    , landcover(aqf::LandCoverRaster::filled(aqf::GridSpec{40.0, -4.0, 0.001, 60, 60}, landcoverCode))
    {
        for (int h = 0; h < meteo.hour_count(); ++h) {
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    for (auto v : aqf::all_meteo_variables) {
                        meteo.at(v, h, r, c) = 10.0 + double(std::size_t(v)) + 0.1 * h + 0.5 * r + 0.25 * c;
                    }
                }
            }
        }
    }

    aqf::Timestamp hour(int h, int minute = 0) const
    {
        return aqf::Timestamp::from_unix(start.unix_seconds() + std::int64_t(h) * 3600 + minute * 60);
    }

    aqf::GridField field(int overpassHour, std::vector<int> emptyCells = {}) const
    {
        auto f = aqf::GridField::empty(grid, "tropospheric_no2_column");
        for (std::size_t i = 0; i < grid.cell_count(); ++i) {
            if (std::find(emptyCells.begin(), emptyCells.end(), int(i)) == emptyCells.end()) {
                f.mean[i] = 1e-5 * double(i + 1) + 1e-7 * overpassHour;
                f.count[i] = 3;
            }
        }
        f.overpass_time = hour(overpassHour, 30);
        return f;
    }

    aqf::StationSeries station(const std::string& id, double lat, double lon, int fromHour, int toHour) const
    {
        aqf::StationSeries s;
        s.meta.station_id = id;
        s.meta.location = aqf::GeoPoint{lat, lon, 650.0};
        s.meta.station_type = aqf::StationType::Traffic;
        for (int h = fromHour; h <= toHour; ++h) {
            s.samples.push_back(aqf::ObservationSample{hour(h), 20.0 + h});
        }
        return s;
    }
};

}
