#include "aqf/error.hpp"
#include "aqf/regrid.hpp"
#include "aqf/rng.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace aqf;

namespace {

GridSpec iberia()
{
    return GridSpec{36.0, -10.0, 0.03, 300, 430};
}

std::vector<SwathSample> random_swath(std::size_t n, std::uint64_t seed, const GridSpec& spec)
{
    Rng rng(seed);
    std::vector<SwathSample> out(n);
    for (auto& s : out) {
        // a margin outside the grid so some samples fall off it
        s.location.latitude = rng.uniform(spec.lat_min - 0.1, spec.lat_max() + 0.1);
        s.location.longitude = rng.uniform(spec.lon_min - 0.1, spec.lon_max() + 0.1);
        s.value = rng.uniform(0.0, 1e-4);
        s.qa = rng.uniform01();
        s.time = Timestamp::from_unix(1546347600 + std::int64_t(rng.uniform_index(600)));
    }
    return out;
}

}

TEST_CASE("cell index examples")
{
    const auto spec = iberia();
    CHECK(cell_index({36.0, -10.0, 0}, spec) == CellIndex{0, 0});
    CHECK(cell_index({36.03, -10.0, 0}, spec) == CellIndex{1, 0});
    CHECK_FALSE(cell_index({90.0, 0.0, 0}, spec));
    CHECK_FALSE(cell_index({35.9999, -5.0, 0}, spec));
    CHECK_FALSE(cell_index({spec.lat_max(), -5.0, 0}, spec));
    CHECK(cell_index({spec.lat_max() - 1e-9, spec.lon_max() - 1e-9, 0}, spec) == CellIndex{299, 429});
}

TEST_CASE("grid spec validation and resolution change")
{
    CHECK_NOTHROW(iberia().validate());
    CHECK_THROWS((GridSpec{36, -10, 0.0, 3, 3}.validate()));
    CHECK_THROWS((GridSpec{36, -10, 0.03, 0, 3}.validate()));
    CHECK_THROWS((GridSpec{89.99, -10, 0.03, 10, 3}.validate()));
    const auto coarse = iberia().with_cell_size(0.1);
    CHECK(coarse.n_rows == 90);
    CHECK(coarse.n_cols == 129);
    CHECK(GridSpec::from_key_values(iberia().to_key_values()) == iberia());
}

TEST_CASE("bin swath examples")
{
    const GridSpec spec{40.0, -4.0, 0.03, 2, 2};
    const auto t = Timestamp::from_civil(2019, 1, 1, 13);
    std::vector<SwathSample> two{{{40.01, -3.99, 0}, 10.0, 0.9, t}, {{40.02, -3.98, 0}, 20.0, 0.9, t}};
    auto f = bin_swath(two, spec, 0.75, "v");
    CHECK(f.mean[0] == 15.0);
    CHECK(f.count[0] == 2);
    CHECK(f.count[1] + f.count[2] + f.count[3] == 0);
    CHECK(f.value_at({0, 0}).value() == 15.0);
    CHECK_FALSE(f.value_at({1, 1}));

    std::vector<SwathSample> low{{{40.01, -3.99, 0}, 10.0, 0.5, t}};
    f = bin_swath(low, spec, 0.75);
    CHECK(f.count[0] == 0);
    CHECK_FALSE(f.value_at({0, 0}));

    f = bin_swath({}, spec, 0.75);
    CHECK(std::accumulate(f.count.begin(), f.count.end(), 0u) == 0u);
    CHECK_FALSE(f.overpass_time);
}

TEST_CASE("qa threshold is inclusive")
{
    const GridSpec spec{40.0, -4.0, 0.03, 1, 1};
    std::vector<SwathSample> s{{{40.01, -3.99, 0}, 1.0, 0.75, Timestamp::from_civil(2019, 1, 1)}};
    CHECK(bin_swath(s, spec, 0.75).count[0] == 1);
}

TEST_CASE("overpass time is the lower median of accepted samples")
{
    const GridSpec spec{40.0, -4.0, 0.03, 1, 1};
    const auto base = Timestamp::from_civil(2019, 1, 1, 13).unix_seconds();
    std::vector<SwathSample> s;
    for (int i : {40, 10, 30, 20}) {
        s.push_back({{40.01, -3.99, 0}, 1.0, 0.9, Timestamp::from_unix(base + i)});
    }
    s.push_back({{40.01, -3.99, 0}, 1.0, 0.1, Timestamp::from_unix(base + 1000)});
    CHECK(bin_swath(s, spec, 0.75).overpass_time->unix_seconds() == base + 20);
    // nothing accepted: median over all samples
    CHECK(bin_swath(s, spec, 0.95).overpass_time->unix_seconds() == base + 30);
}

TEST_CASE("binning conserves accepted mass and filters monotonically")
{
    const GridSpec spec{40.0, -4.0, 0.03, 20, 25};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto samples = random_swath(4000, seed, spec);
        const auto f = bin_swath(samples, spec, 0.75);
        double cells = 0.0;
        double accepted = 0.0;
        std::size_t acceptedIn = 0;
        for (std::size_t i = 0; i < spec.cell_count(); ++i) {
            cells += f.mean[i] * f.count[i];
        }
        for (const auto& s : samples) {
            if (s.qa >= 0.75 && cell_index(s.location, spec)) {
                accepted += s.value;
                ++acceptedIn;
            }
        }
        CHECK(testing::rel_close(cells, accepted, 1e-9));
        CHECK(std::accumulate(f.count.begin(), f.count.end(), std::size_t(0)) == acceptedIn);

        const auto g = bin_swath(samples, spec, 0.8);
        for (std::size_t i = 0; i < spec.cell_count(); ++i) {
            REQUIRE(g.count[i] <= f.count[i]);
        }
    }
}

TEST_CASE("binning is independent of sample order and thread count")
{
    const GridSpec spec{40.0, -4.0, 0.03, 10, 10};
    auto samples = random_swath(3000, 9, spec);
    const auto ref = bin_swath(samples, spec, 0.75);

    Rng rng(2);
    rng.shuffle(std::span(samples));
    const auto shuffled = bin_swath(samples, spec, 0.75);
    CHECK(shuffled.count == ref.count);
    CHECK(shuffled.overpass_time == ref.overpass_time);
    for (std::size_t i = 0; i < spec.cell_count(); ++i) {
        CHECK(testing::rel_close(shuffled.mean[i], ref.mean[i], 1e-12));
    }

    const auto one = bin_swath(samples, spec, 0.75, "v", 1);
    const auto again = bin_swath(samples, spec, 0.75, "v", 1);
    CHECK(one.mean == again.mean);
    const auto four = bin_swath(samples, spec, 0.75, "v", 4);
    CHECK(four.count == one.count);
    CHECK(four.mean == one.mean);
    CHECK(four.overpass_time == one.overpass_time);
}

TEST_CASE("swath and grid field files round-trip")
{
    testing::TempDir dir;
    const GridSpec spec{40.0, -4.0, 0.03, 6, 7};
    const auto samples = random_swath(500, 4, spec);
    write_swath_csv(samples, dir / "s.csv");
    const auto back = read_swath_csv(dir / "s.csv");
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].location.latitude == samples[i].location.latitude);
        CHECK(back[i].location.longitude == samples[i].location.longitude);
        CHECK(back[i].value == samples[i].value);
        CHECK(back[i].qa == samples[i].qa);
        CHECK(back[i].time == samples[i].time);
    }

    const auto f = bin_swath(samples, spec, 0.5, "tropospheric_no2_column");
    write_grid_field(f, dir / "g.csv");
    CHECK(sidecar_path(dir / "g.csv") == dir / "g.spec");
    const auto g = read_grid_field(dir / "g.csv");
    CHECK(g.spec == f.spec);
    CHECK(g.count == f.count);
    CHECK(g.mean == f.mean);
    CHECK(g.overpass_time == f.overpass_time);
    CHECK(g.variable == f.variable);

    write_grid_spec(spec, dir / "grid.spec");
    CHECK(read_grid_spec(dir / "grid.spec") == spec);
}

TEST_CASE("malformed swath file is rejected")
{
    testing::TempDir dir;
    {
        auto out = open_output(dir / "bad.csv");
        out << "lat,lon,value,qa,time_unix\n40,-4,1e-5,1.5,1546347600\n";
    }
    CHECK_THROWS_AS(read_swath_csv(dir / "bad.csv"), DataError);
    {
        auto out = open_output(dir / "cols.csv");
        out << "lat,lon,value,time_unix\n40,-4,1e-5,1546347600\n";
    }
    CHECK_THROWS_WITH_AS(read_swath_csv(dir / "cols.csv"), doctest::Contains("qa"), DataError);
}
