#include "aqf/error.hpp"
#include "aqf/forest.hpp"
#include "aqf/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace aqf;

namespace {

Dataset tiny(std::vector<std::vector<double>> x, std::vector<double> y)
{
    std::vector<std::string> names;
    for (std::size_t i = 0; i < x.size(); ++i) {
        names.push_back("x" + std::to_string(i));
    }
    return Dataset::from_columns(names, x, std::move(y));
}

std::vector<std::size_t> all_rows(const Dataset& d)
{
    std::vector<std::size_t> r(d.n_rows);
    std::iota(r.begin(), r.end(), std::size_t(0));
    return r;
}

ForestConfig single_tree()
{
    ForestConfig c;
    c.n_estimators = 1;
    c.max_features = MaxFeatures::all;
    c.bootstrap = false;
    c.seed = 1;
    return c;
}

}

TEST_CASE("best split examples")
{
    const auto d = tiny({{1, 2, 3, 4}}, {0, 0, 10, 10});
    const std::vector<std::size_t> f0{0};
    const auto s = best_split(d, all_rows(d), f0);
    REQUIRE(s);
    CHECK(s->feature == 0);
    CHECK(s->threshold == 2.5);
    CHECK(s->impurity_decrease == doctest::Approx(100.0));

    const auto flat = tiny({{1, 2, 3, 4}}, {5, 5, 5, 5});
    CHECK_FALSE(best_split(flat, all_rows(flat), f0));

    const auto twin = tiny({{1, 2, 3, 4}, {1, 2, 3, 4}}, {0, 0, 10, 10});
    const std::vector<std::size_t> both{0, 1};
    CHECK(best_split(twin, all_rows(twin), both)->feature == 0);
    const auto twinRev = tiny({{4, 3, 2, 1}, {1, 2, 3, 4}}, {0, 0, 10, 10});
    // equal decreases on both features: lower index wins
    CHECK(best_split(twinRev, all_rows(twinRev), both)->feature == 0);

    // constant feature offers no split
    const auto constant = tiny({{3, 3, 3, 3}}, {0, 1, 2, 3});
    CHECK_FALSE(best_split(constant, all_rows(constant), f0));

    // min leaf size
    const auto lop = tiny({{1, 2, 3, 4, 5}}, {0, 0, 0, 0, 100});
    CHECK(best_split(lop, all_rows(lop), f0, 1)->threshold == 4.5);
    CHECK(best_split(lop, all_rows(lop), f0, 2)->threshold == 3.5);
}

TEST_CASE("single tree equals exhaustive CART")
{
    for (std::uint64_t seed = 1; seed <= 150; ++seed) {
        const auto t = testing::random_small_table(seed);
        const auto model = fit(testing::dataset_of(t), single_tree());
        REQUIRE(model.trees.size() == 1);
        INFO("seed " << seed);
        CHECK(testing::tree_matches_oracle(model.trees[0], testing::oracle_cart(t.x, t.y)));
    }
}

TEST_CASE("single tree equals exhaustive CART with larger leaves")
{
    for (std::uint64_t seed = 300; seed <= 360; ++seed) {
        const auto t = testing::random_small_table(seed);
        auto c = single_tree();
        c.min_samples_leaf = 2;
        c.min_samples_split = 5;
        const auto model = fit(testing::dataset_of(t), c);
        INFO("seed " << seed);
        CHECK(testing::tree_matches_oracle(model.trees[0], testing::oracle_cart(t.x, t.y, 5, 2)));
    }
}

TEST_CASE("constant target")
{
    const auto d = tiny({{1, 2, 3, 4, 5}, {5, 1, 4, 2, 3}}, {7, 7, 7, 7, 7});
    ForestConfig c;
    c.n_estimators = 20;
    const auto m = fit(d, c);
    for (const auto& t : m.trees) {
        CHECK(t.nodes.size() == 1);
        CHECK(t.nodes[0].value == 7.0);
    }
    for (double p : predict(m, d)) {
        CHECK(p == 7.0);
    }
    const auto g = gini_importance(m);
    CHECK(std::accumulate(g.begin(), g.end(), 0.0) == 0.0);
}

TEST_CASE("identical single-leaf trees predict their value")
{
    ForestModel m;
    m.feature_names = {"x0"};
    m.target_min = 0;
    m.target_max = 10;
    for (int i = 0; i < 5; ++i) {
        RegressionTree t;
        TreeNode leaf;
        leaf.value = 4.0;
        leaf.n_samples = 3;
        t.nodes.push_back(leaf);
        m.trees.push_back(t);
    }
    m.impurity_decrease = {0.0};
    const auto d = tiny({{1, 2}}, {0, 0});
    CHECK(predict(m, d) == std::vector<double>{4.0, 4.0});
}

TEST_CASE("fit is deterministic and independent of threads")
{
    const auto d = synth::smooth_suite(400, 3);
    ForestConfig c;
    c.n_estimators = 40;
    c.seed = 99;
    const auto a = fit(d, c, 1);
    const auto b = fit(d, c, 1);
    const auto p = fit(d, c, 4);
    CHECK(serialize_model(a) == serialize_model(b));
    CHECK(serialize_model(a) == serialize_model(p));
    CHECK(predict(a, d, 1) == predict(p, d, 3));
    c.seed = 100;
    CHECK(serialize_model(fit(d, c)) != serialize_model(a));
}

TEST_CASE("step function is learned")
{
    const auto d = synth::step_suite(1000, 5);
    ForestConfig c;
    c.seed = 2;
    const auto m = fit(d, c);
    const auto q = tiny({{-1.0, 1.0}}, {0, 0});
    const auto p = predict(m, q);
    CHECK(std::abs(p[0] - 0.0) < 1.0);
    CHECK(std::abs(p[1] - 10.0) < 1.0);
}

TEST_CASE("predictions stay inside the training target range")
{
    const auto d = synth::smooth_suite(300, 8);
    ForestConfig c;
    c.n_estimators = 30;
    c.seed = 4;
    const auto m = fit(d, c);
    const double lo = *std::min_element(d.target.begin(), d.target.end());
    const double hi = *std::max_element(d.target.begin(), d.target.end());
    CHECK(m.target_min == lo);
    CHECK(m.target_max == hi);
    const auto far = synth::smooth_suite(500, 9);
    auto shifted = far;
    for (auto& v : shifted.columns) {
        v = v * 5.0 - 2.0;
    }
    for (double p : predict(m, shifted)) {
        CHECK(p >= lo);
        CHECK(p <= hi);
    }
}

TEST_CASE("gini importance")
{
    const auto d = synth::importance_suite(800, 3);
    ForestConfig c;
    c.n_estimators = 50;
    c.seed = 3;
    const auto m = fit(d, c);
    const auto g = gini_importance(m);
    REQUIRE(g.size() == 6);
    CHECK(std::accumulate(g.begin(), g.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : g) {
        CHECK(v >= 0.0);
    }
    CHECK(std::max_element(g.begin(), g.end()) == g.begin());

    // a feature that never splits scores zero
    auto withConst = Dataset::from_columns({"x", "c"}, {std::vector<double>(d.column(0).begin(), d.column(0).end()),
                                                        std::vector<double>(d.n_rows, 1.0)},
                                           d.target);
    const auto g2 = gini_importance(fit(withConst, c));
    CHECK(g2[1] == 0.0);
    CHECK(g2[0] == doctest::Approx(1.0));
}

TEST_CASE("permutation importance")
{
    const auto train = synth::importance_suite(800, 3);
    const auto test = synth::importance_suite(300, 4);
    ForestConfig c;
    c.n_estimators = 50;
    c.seed = 3;
    const auto m = fit(train, c);
    const auto p = permutation_importance(m, test, 5, 11);
    REQUIRE(p.size() == 6);
    CHECK(p[0].mean > 0.5);
    for (std::size_t f = 1; f < 6; ++f) {
        CHECK(p[f].mean < p[0].mean);
    }
    CHECK(permutation_importance(m, test, 5, 11, 1)[2].mean == permutation_importance(m, test, 5, 11, 3)[2].mean);

    auto constCol = test;
    for (auto& v : constCol.column(3)) {
        v = 5.0;
    }
    const auto pc = permutation_importance(m, constCol, 5, 1);
    CHECK(pc[3].mean == 0.0);
    CHECK(pc[3].stdev == 0.0);

    auto flat = test;
    std::fill(flat.target.begin(), flat.target.end(), 1.0);
    CHECK_THROWS_AS(permutation_importance(m, flat, 2, 1), DataError);
}

TEST_CASE("max features")
{
    CHECK(parse_max_features("auto") == MaxFeatures::all);
    CHECK(parse_max_features("all") == MaxFeatures::all);
    CHECK(parse_max_features("sqrt") == MaxFeatures::sqrt);
    CHECK(parse_max_features("log2") == MaxFeatures::log2);
    CHECK_THROWS_AS(parse_max_features("half"), InvalidArgument);
    CHECK(candidate_feature_count(MaxFeatures::all, 26) == 26);
    CHECK(candidate_feature_count(MaxFeatures::sqrt, 26) == 6);
    CHECK(candidate_feature_count(MaxFeatures::log2, 26) == 5);
    CHECK(candidate_feature_count(MaxFeatures::sqrt, 25) == 5);
    CHECK(candidate_feature_count(MaxFeatures::log2, 1) == 1);
    CHECK(candidate_feature_count(MaxFeatures::sqrt, 1) == 1);
}

TEST_CASE("config and data validation")
{
    ForestConfig c;
    c.n_estimators = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.min_samples_split = 1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    const auto d = synth::smooth_suite(50, 1);
    const auto m = fit(d, ForestConfig{5});
    auto other = Dataset::from_columns({"a"}, {{1.0}}, {1.0});
    CHECK_THROWS_AS(predict(m, other), DataError);
}

TEST_CASE("model text round-trips exactly")
{
    const auto d = synth::smooth_suite(300, 2);
    ForestConfig c;
    c.n_estimators = 15;
    c.seed = 77;
    c.max_features = MaxFeatures::log2;
    const auto m = fit(d, c);
    const auto text = serialize_model(m);
    const auto back = deserialize_model(text);
    CHECK(serialize_model(back) == text);
    CHECK(back.trees == m.trees);
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.impurity_decrease == m.impurity_decrease);
    CHECK(back.config.seed == 77);
    CHECK(back.config.max_features == MaxFeatures::log2);
    CHECK(predict(back, d) == predict(m, d));

    testing::TempDir dir;
    save_model(m, dir / "m.txt");
    CHECK(serialize_model(load_model(dir / "m.txt")) == text);

    CHECK_THROWS_AS(deserialize_model("aqf-forest 2\n"), DataError);
    CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), DataError);
}
