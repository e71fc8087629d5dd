#include "aqf/error.hpp"
#include "aqf/join.hpp"
#include "aqf/rng.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace aqf;

namespace {

StationSeries series_of(std::vector<std::pair<Timestamp, double>> samples)
{
    StationSeries s;
    s.meta.station_id = "A";
    s.meta.location = {40.0, -4.0, 600};
    for (auto [t, v] : samples) {
        s.samples.push_back({t, v});
    }
    return s;
}

Timestamp at(int h, int m = 0)
{
    return Timestamp::from_civil(2019, 3, 1, unsigned(h), unsigned(m));
}

}

TEST_CASE("observation interpolation examples")
{
    const auto s = series_of({{at(13), 10.0}, {at(14), 20.0}});
    CHECK(interp_observation(s, at(13, 30)).value() == 15.0);
    CHECK(interp_observation(s, at(13)).value() == 10.0);
    CHECK(interp_observation(s, at(14)).value() == 20.0);
    CHECK_FALSE(interp_observation(s, at(12, 59)));
    CHECK_FALSE(interp_observation(s, at(14, 1)));

    const auto gap = series_of({{at(13), 10.0}, {at(16), 20.0}});
    CHECK_FALSE(interp_observation(gap, at(14, 30), std::chrono::hours(2)));
    CHECK(interp_observation(gap, at(14, 30), std::chrono::hours(3)).value() == doctest::Approx(15.0));
    CHECK(interp_observation(gap, at(16), std::chrono::hours(2)).value() == 20.0);
}

TEST_CASE("interpolated observations stay within their bracket")
{
    Rng rng(21);
    StationSeries s;
    std::int64_t t = at(0).unix_seconds();
    for (int i = 0; i < 200; ++i) {
        s.samples.push_back({Timestamp::from_unix(t), rng.uniform(0, 100)});
        t += 600 + std::int64_t(rng.uniform_index(7200));
    }
    for (int i = 0; i < 2000; ++i) {
        const auto q = Timestamp::from_unix(at(0).unix_seconds() + std::int64_t(rng.uniform_index(std::uint64_t(s.samples.back().time.unix_seconds() - at(0).unix_seconds()))));
        const auto v = interp_observation(s, q);
        auto after = std::lower_bound(s.samples.begin(), s.samples.end(), q, [](const auto& a, Timestamp b) { return a.time < b; });
        if (!v) {
            REQUIRE(after != s.samples.begin());
            REQUIRE(after->time != q);
            REQUIRE(after->time.unix_seconds() - std::prev(after)->time.unix_seconds() > 7200);
            continue;
        }
        if (after->time == q) {
            CHECK(*v == after->value);
        } else {
            const auto before = std::prev(after);
            CHECK(*v >= std::min(before->value, after->value));
            CHECK(*v <= std::max(before->value, after->value));
        }
    }
}

TEST_CASE("series validation")
{
    auto s = series_of({{at(14), 1.0}, {at(13), 2.0}});
    CHECK_THROWS_AS(s.validate(), DataError);
    s = series_of({{at(13), -1.0}});
    CHECK_THROWS_AS(s.validate(), DataError);
}

namespace {

MeteoFieldSet unit_lattice(double sw, double se, double nw, double ne)
{
    MeteoFieldSet m(GridSpec{40.0, -4.0, 0.25, 2, 2}, at(0), 3);
    for (int h = 0; h < 3; ++h) {
        for (auto v : all_meteo_variables) {
            m.at(v, h, 0, 0) = sw;
            m.at(v, h, 0, 1) = se;
            m.at(v, h, 1, 0) = nw;
            m.at(v, h, 1, 1) = ne;
        }
    }
    return m;
}

}

TEST_CASE("bilinear meteo examples")
{
    const auto c = unit_lattice(7, 7, 7, 7);
    for (double lat : {40.0, 40.1, 40.25}) {
        for (double lon : {-4.0, -3.9, -3.75}) {
            CHECK(meteo_at(c, {lat, lon, 0}, at(1))[MeteoVariable::temp_2m] == doctest::Approx(7.0));
        }
    }

    const auto half = unit_lattice(0, 0, 10, 10);
    CHECK(meteo_at(half, {40.125, -3.875, 0}, at(0))[MeteoVariable::blh] == doctest::Approx(5.0));

    const auto corner = unit_lattice(0, 0, 0, 8);
    const double expected = testing::bilinear(0, 0, 0, 8, 0.25, 0.25);
    CHECK(expected == doctest::Approx(0.5));
    CHECK(meteo_at(corner, {40.0625, -3.9375, 0}, at(2))[MeteoVariable::ssrd] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("meteo interpolation matches the direct formula and hits nodes exactly")
{
    Rng rng(8);
    MeteoFieldSet m(GridSpec{39.5, -4.5, 0.25, 4, 5}, at(0), 4);
    for (int h = 0; h < 4; ++h) {
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 5; ++c) {
                for (auto v : all_meteo_variables) {
                    m.at(v, h, r, c) = rng.uniform(-10, 10);
                }
            }
        }
    }
    // exact nodes at exact hours, edges included
    for (int h = 0; h < 4; ++h) {
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 5; ++c) {
                const GeoPoint p{39.5 + 0.25 * r, -4.5 + 0.25 * c, 0};
                const auto v = meteo_at(m, p, at(h));
                for (auto var : all_meteo_variables) {
                    REQUIRE(v[var] == m.at(var, h, r, c));
                }
            }
        }
    }
    // random points and times against the direct formula
    for (int i = 0; i < 500; ++i) {
        const double lat = rng.uniform(39.5, 40.25);
        const double lon = rng.uniform(-4.5, -3.5);
        const int secs = int(rng.uniform_index(3 * 3600));
        const auto t = Timestamp::from_unix(at(0).unix_seconds() + secs);
        const double y = (lat - 39.5) / 0.25;
        const double x = (lon + 4.5) / 0.25;
        const int r = std::min(int(std::floor(y)), 2);
        const int c = std::min(int(std::floor(x)), 3);
        const int h = std::min(secs / 3600, 2);
        const double ft = (secs - h * 3600) / 3600.0;
        auto at_hour = [&](int hh) {
            return testing::bilinear(m.at(MeteoVariable::temp_2m, hh, r, c), m.at(MeteoVariable::temp_2m, hh, r, c + 1),
                                     m.at(MeteoVariable::temp_2m, hh, r + 1, c), m.at(MeteoVariable::temp_2m, hh, r + 1, c + 1),
                                     y - r, x - c);
        };
        const double expected = (1 - ft) * at_hour(h) + ft * at_hour(h + 1);
        CHECK(meteo_at(m, {lat, lon, 0}, t)[MeteoVariable::temp_2m] == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("meteo derived wind and coverage errors")
{
    auto m = unit_lattice(0, 0, 0, 0);
    for (int h = 0; h < 3; ++h) {
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                m.at(MeteoVariable::wind_u10, h, r, c) = 3.0;
                m.at(MeteoVariable::wind_v10, h, r, c) = 4.0;
            }
        }
    }
    const auto v = meteo_at(m, {40.1, -3.9, 0}, at(1, 20));
    CHECK(v.wind_speed == doctest::Approx(5.0));
    CHECK(v.wind_direction == doctest::Approx(wind(3, 4).direction));

    CHECK_THROWS_AS(meteo_at(m, {41.0, -3.9, 0}, at(1)), DataError);
    CHECK_THROWS_AS(meteo_at(m, {40.1, -3.9, 0}, at(3)), DataError);
    CHECK_FALSE(try_meteo_at(m, {40.1, -3.9, 0}, at(2, 1)));
    CHECK(try_meteo_at(m, {40.1, -3.9, 0}, at(2)));

    m.at(MeteoVariable::blh, 1, 1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(try_meteo_at(m, {40.1, -3.9, 0}, at(1)));
    // a zero-weight missing node does not matter
    CHECK(try_meteo_at(m, {40.0, -4.0, 0}, at(0)));
}

TEST_CASE("meteo directory round-trip")
{
    testing::TempDir dir;
    Rng rng(1);
    MeteoFieldSet m(GridSpec{39.5, -4.5, 0.25, 3, 2}, at(0), 5);
    for (int h = 0; h < 5; ++h) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 2; ++c) {
                for (auto v : all_meteo_variables) {
                    m.at(v, h, r, c) = rng.normal(0, 1000);
                }
            }
        }
    }
    write_meteo_dir(m, dir / "meteo");
    const auto back = read_meteo_dir(dir / "meteo");
    CHECK(back.spec() == m.spec());
    CHECK(back.start() == m.start());
    REQUIRE(back.hour_count() == 5);
    for (int h = 0; h < 5; ++h) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 2; ++c) {
                for (auto v : all_meteo_variables) {
                    REQUIRE(back.at(v, h, r, c) == m.at(v, h, r, c));
                }
            }
        }
    }
}

namespace {

const GridSpec s_pixels{40.0, -4.0, 0.003, 10, 10};

GeoRect whole()
{
    return GeoRect{40.0, 40.03, -4.0, -3.97};
}

}

TEST_CASE("land-cover fraction examples")
{
    auto urban = LandCoverRaster::filled(s_pixels, 111);
    auto f = landcover_fractions(urban, whole());
    CHECK(f[std::size_t(LandCoverClass::continuous_urban)] == 1.0);
    CHECK(std::accumulate(f.begin(), f.end(), 0.0) == 1.0);

    auto split = LandCoverRaster::filled(s_pixels, 111);
    for (int r = 0; r < 10; ++r) {
        for (int c = 5; c < 10; ++c) {
            split.set(r, c, 311);
        }
    }
    f = landcover_fractions(split, whole());
    CHECK(f[std::size_t(LandCoverClass::continuous_urban)] == 0.5);
    CHECK(f[std::size_t(LandCoverClass::broadleaf)] == 0.5);

    const auto water = LandCoverRaster::filled(s_pixels, 512);
    f = landcover_fractions(water, whole());
    CHECK(std::accumulate(f.begin(), f.end(), 0.0) == 0.0);

    CHECK_THROWS_AS(landcover_fractions(urban, GeoRect{50, 51, 0, 1}), DataError);
}

TEST_CASE("missing pixels are left out of the fractions")
{
    auto r = LandCoverRaster::filled(s_pixels, 0);
    for (int c = 0; c < 10; ++c) {
        r.set(0, c, 122);
    }
    const auto f = landcover_fractions(r, whole());
    CHECK(f[std::size_t(LandCoverClass::road_rail)] == 1.0);
    CHECK_THROWS_AS(landcover_fractions(LandCoverRaster::filled(s_pixels, 0), whole()), DataError);
}

TEST_CASE("land-cover codes")
{
    CHECK(landcover_code(LandCoverClass::continuous_urban) == 111);
    CHECK(landcover_code(LandCoverClass::port) == 123);
    CHECK(landcover_code(LandCoverClass::airport) == 124);
    CHECK(landcover_code(LandCoverClass::broadleaf) == 311);
    CHECK(is_valid_landcover_code(523));
    CHECK_FALSE(is_valid_landcover_code(125));
    CHECK_FALSE(is_valid_landcover_code(999));
    auto r = LandCoverRaster::filled(s_pixels, 111);
    CHECK_THROWS(r.set(0, 0, 125));
}

TEST_CASE("per-cell fractions sum to at most one and match the single-cell form")
{
    static const int codes[] = {0, 111, 112, 121, 122, 123, 124, 311, 211, 512, 312};
    Rng rng(12);
    const GridSpec px{40.0, -4.0, 0.001, 90, 120};
    auto r = LandCoverRaster::filled(px, 0);
    for (int i = 0; i < 90; ++i) {
        for (int j = 0; j < 120; ++j) {
            r.set(i, j, codes[rng.uniform_index(std::size(codes))]);
        }
    }
    const GridSpec grid{40.0, -4.0, 0.03, 3, 4};
    const auto all = landcover_grid(r, grid);
    REQUIRE(all.size() == grid.cell_count());
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) {
            const auto& g = all[grid.flat_index(i, j)];
            REQUIRE(g);
            CHECK(std::accumulate(g->begin(), g->end(), 0.0) <= 1.0 + 1e-12);
            const auto single = landcover_fractions(r, GeoRect::of_cell(grid, {i, j}));
            for (std::size_t k = 0; k < landcover_class_count; ++k) {
                CHECK((*g)[k] == doctest::Approx(single[k]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("land-cover and station files round-trip")
{
    testing::TempDir dir;
    auto r = LandCoverRaster::filled(s_pixels, 211);
    r.set(3, 4, 111);
    r.set(9, 9, 0);
    write_landcover_csv(r, dir / "lc.csv");
    const auto back = read_landcover_csv(dir / "lc.csv");
    CHECK(back.spec == r.spec);
    CHECK(back.codes == r.codes);

    std::vector<StationMeta> metas{{"B", {40.5, -3.5, 700}, StationType::Industrial}, {"A", {41, -3, 12.5}, StationType::Background}};
    write_station_meta_csv(metas, dir / "stations.csv");
    const auto m = read_station_meta_csv(dir / "stations.csv");
    REQUIRE(m.size() == 2);
    CHECK(m[0].station_id == "B");
    CHECK(m[0].station_type == StationType::Industrial);
    CHECK(m[1].location.altitude == 12.5);

    std::vector<StationSeries> series(2);
    series[0].meta = metas[0];
    series[0].samples = {{at(1), 3.5}, {at(2), 4.0}};
    series[1].meta = metas[1];
    series[1].samples = {{at(1), 0.0}};
    write_station_series_csv(series, dir / "obs.csv");
    const auto s = read_station_series_csv(dir / "obs.csv", metas);
    REQUIRE(s.size() == 2);
    for (const auto& x : s) {
        const auto& ref = x.meta.station_id == "B" ? series[0] : series[1];
        REQUIRE(x.samples.size() == ref.samples.size());
        for (std::size_t i = 0; i < ref.samples.size(); ++i) {
            CHECK(x.samples[i].time == ref.samples[i].time);
            CHECK(x.samples[i].value == ref.samples[i].value);
        }
    }

    {
        auto out = open_output(dir / "orphan.csv");
        out << "station_id,time_unix,value\nZZ,1551402000,1\n";
    }
    CHECK_THROWS_AS(read_station_series_csv(dir / "orphan.csv", metas), DataError);
}
