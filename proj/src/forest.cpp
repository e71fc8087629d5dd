#include "aqf/forest.hpp"
#include "aqf/error.hpp"
#include "aqf/parallel.hpp"
#include "aqf/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace aqf {

Dataset Dataset::from_columns(std::vector<std::string> names, const std::vector<std::vector<double>>& cols, std::vector<double> target)
{
    if (names.size() != cols.size()) {
        throw InvalidArgument("{} feature names for {} columns", names.size(), cols.size());
    }
    Dataset d;
    d.feature_names = std::move(names);
    d.n_rows = cols.empty() ? target.size() : cols.front().size();
    d.columns.reserve(d.n_rows * cols.size());
    for (const auto& c : cols) {
        if (c.size() != d.n_rows) {
            throw InvalidArgument("Column lengths differ");
        }
        d.columns.insert(d.columns.end(), c.begin(), c.end());
    }
    d.target = std::move(target);
    return d;
}

Dataset Dataset::from_table(const FeatureTable& table, bool requireTarget)
{
    Dataset d;
    d.feature_names = aqf::feature_names();
    d.n_rows = table.rows.size();
    d.columns.resize(d.n_rows * feature_count);
    d.groups.reserve(d.n_rows);
    bool allTargets = true;
    for (std::size_t i = 0; i < d.n_rows; ++i) {
        const auto& r = table.rows[i];
        for (std::size_t f = 0; f < feature_count; ++f) {
            d.columns[f * d.n_rows + i] = r.features[f];
        }
        d.groups.push_back(r.station_id);
        allTargets = allTargets && r.target.has_value();
    }
    if (allTargets) {
        d.target.reserve(d.n_rows);
        for (const auto& r : table.rows) {
            d.target.push_back(*r.target);
        }
    } else if (requireTarget) {
        throw DataError("Feature table has rows without a target value");
    }
    return d;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    Dataset d;
    d.feature_names = feature_names;
    d.n_rows = rows.size();
    d.columns.resize(d.n_rows * n_features());
    for (std::size_t f = 0; f < n_features(); ++f) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            d.columns[f * d.n_rows + i] = at(rows[i], f);
        }
    }
    if (target.size() == n_rows) {
        d.target.reserve(rows.size());
        for (auto r : rows) {
            d.target.push_back(target[r]);
        }
    }
    if (groups.size() == n_rows) {
        d.groups.reserve(rows.size());
        for (auto r : rows) {
            d.groups.push_back(groups[r]);
        }
    }
    return d;
}

void Dataset::validate(bool requireTarget) const
{
    if (n_rows == 0) {
        throw DataError("Dataset is empty");
    }
    if (feature_names.empty()) {
        throw DataError("Dataset has no feature columns");
    }
    if (columns.size() != n_rows * n_features()) {
        throw DataError("Dataset column storage does not match {} rows x {} features", n_rows, n_features());
    }
    for (std::size_t f = 0; f < n_features(); ++f) {
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (!std::isfinite(at(i, f))) {
                throw DataError("Row {} feature '{}' is not finite", i + 1, feature_names[f]);
            }
        }
    }
    if (requireTarget) {
        if (target.size() != n_rows) {
            throw DataError("Dataset has {} targets for {} rows", target.size(), n_rows);
        }
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (!std::isfinite(target[i])) {
                throw DataError("Row {} target is not finite", i + 1);
            }
        }
    }
}

std::string_view max_features_name(MaxFeatures m) noexcept
{
    switch (m) {
    case MaxFeatures::all: return "all";
    case MaxFeatures::sqrt: return "sqrt";
    case MaxFeatures::log2: return "log2";
    }
    return "";
}

MaxFeatures parse_max_features(std::string_view s)
{
    if (s == "all" || s == "auto") {
        return MaxFeatures::all;
    }
    if (s == "sqrt") {
        return MaxFeatures::sqrt;
    }
    if (s == "log2") {
        return MaxFeatures::log2;
    }
    throw InvalidArgument("Unknown max_features '{}' (expected all, auto, sqrt or log2)", s);
}

std::size_t candidate_feature_count(MaxFeatures mode, std::size_t p) noexcept
{
    std::size_t m = p;
    switch (mode) {
    case MaxFeatures::all:
        break;
    case MaxFeatures::sqrt:
        m = 0;
        while (m * m < p) {
            ++m;
        }
        break;
    case MaxFeatures::log2:
        m = 0;
        while ((std::size_t(1) << m) < p) {
            ++m;
        }
        break;
    }
    return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(p, 1));
}

void ForestConfig::validate() const
{
    if (n_estimators < 1) {
        throw InvalidArgument("n_estimators must be >= 1, got {}", n_estimators);
    }
    if (min_samples_split < 2) {
        throw InvalidArgument("min_samples_split must be >= 2, got {}", min_samples_split);
    }
    if (min_samples_leaf < 1) {
        throw InvalidArgument("min_samples_leaf must be >= 1, got {}", min_samples_leaf);
    }
}

double RegressionTree::predict(const Dataset& data, std::size_t row) const noexcept
{
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = data.at(row, std::size_t(n.feature)) <= n.threshold ? std::size_t(n.left) : std::size_t(n.right);
    }
    return nodes[i].value;
}

double RegressionTree::predict(std::span<const double> features) const noexcept
{
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = features[std::size_t(n.feature)] <= n.threshold ? std::size_t(n.left) : std::size_t(n.right);
    }
    return nodes[i].value;
}

std::size_t RegressionTree::split_count() const noexcept
{
    return std::size_t(std::count_if(nodes.begin(), nodes.end(), [](auto& n) { return !n.is_leaf(); }));
}

namespace {

struct ValuePair
{
    double x;
    double c; // target minus node mean
};

struct SplitScratch
{
    std::vector<ValuePair> pairs;
};

std::optional<SplitChoice> find_split(const Dataset& data, std::span<const std::size_t> samples,
                                      std::span<const std::size_t> candidates, int minLeaf, SplitScratch& scratch)
{
    const std::size_t n = samples.size();
    if (n < 2) {
        return std::nullopt;
    }
    const double first = data.target[samples[0]];
    double sum = 0.0;
    bool allEqual = true;
    for (auto s : samples) {
        const double y = data.target[s];
        sum += y;
        allEqual = allEqual && y == first;
    }
    if (allEqual) {
        return std::nullopt;
    }
    const double mean = sum / double(n);
    double total = 0.0;
    double sumSquares = 0.0;
    for (auto s : samples) {
        const double c = data.target[s] - mean;
        total += c;
        sumSquares += c * c;
    }
    const double tol = 1e-12 * sumSquares;
    const double parentTerm = total * total / double(n);

    std::optional<SplitChoice> best;
    double bestDecrease = 0.0;
    auto& pairs = scratch.pairs;
    for (auto f : candidates) {
        pairs.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            pairs[i] = ValuePair{data.at(samples[i], f), data.target[samples[i]] - mean};
        }
        std::sort(pairs.begin(), pairs.end(), [](const ValuePair& a, const ValuePair& b) { return a.x < b.x; });
        if (pairs.front().x == pairs.back().x) {
            continue;
        }
        double left = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left += pairs[i].c;
            if (!(pairs[i].x < pairs[i + 1].x)) {
                continue;
            }
            const std::size_t nl = i + 1;
            const std::size_t nr = n - nl;
            if (nl < std::size_t(minLeaf) || nr < std::size_t(minLeaf)) {
                continue;
            }
            const double right = total - left;
            const double decrease = left * left / double(nl) + right * right / double(nr) - parentTerm;
            if (decrease > bestDecrease + tol) {
                const double a = pairs[i].x;
                const double b = pairs[i + 1].x;
                double threshold = (a + b) / 2.0;
                if (!(threshold < b)) {
                    threshold = a;
                }
                best = SplitChoice{f, threshold, decrease};
                bestDecrease = decrease;
            }
        }
    }
    return best;
}

class TreeBuilder
{
public:
    TreeBuilder(const Dataset& data, const ForestConfig& config, std::uint64_t seed)
    : _data(data)
    , _config(config)
    , _rng(seed)
    , _importance(data.n_features(), 0.0)
    , _candidateCount(candidate_feature_count(config.max_features, data.n_features()))
    {
        _pool.resize(data.n_features());
        std::iota(_pool.begin(), _pool.end(), std::size_t(0));
    }

    RegressionTree build(std::uint64_t seed)
    {
        const std::size_t n = _data.n_rows;
        std::vector<std::size_t> samples(n);
        if (_config.bootstrap) {
            for (auto& s : samples) {
                s = static_cast<std::size_t>(_rng.uniform_index(n));
            }
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t(0));
        }

        RegressionTree tree;
        tree.seed = seed;
        grow(samples, 0, n, tree.nodes);
        return tree;
    }

    const std::vector<double>& importance() const noexcept { return _importance; }

private:
    std::span<const std::size_t> draw_candidates()
    {
        const std::size_t p = _pool.size();
        if (_candidateCount >= p) {
            return _pool;
        }
        for (std::size_t i = 0; i < _candidateCount; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(_rng.uniform_index(p - i));
            std::swap(_pool[i], _pool[j]);
        }
        _candidates.assign(_pool.begin(), _pool.begin() + std::ptrdiff_t(_candidateCount));
        std::sort(_candidates.begin(), _candidates.end());
        return _candidates;
    }

    double leaf_value(std::span<const std::size_t> segment)
    {
        // Summed in ascending row order so the value does not depend on how
        // the segment was partitioned on the way down.
        _leafRows.assign(segment.begin(), segment.end());
        std::sort(_leafRows.begin(), _leafRows.end());
        double sum = 0.0;
        for (auto r : _leafRows) {
            sum += _data.target[r];
        }
        return sum / double(segment.size());
    }

    int grow(std::vector<std::size_t>& samples, std::size_t begin, std::size_t end, std::vector<TreeNode>& nodes)
    {
        const int self = static_cast<int>(nodes.size());
        nodes.emplace_back();
        const std::size_t n = end - begin;
        const std::span<const std::size_t> segment(samples.data() + begin, n);
        nodes[self].n_samples = n;

        std::optional<SplitChoice> split;
        if (n >= std::size_t(_config.min_samples_split)) {
            split = find_split(_data, segment, draw_candidates(), _config.min_samples_leaf, _scratch);
        }
        if (!split) {
            nodes[self].value = leaf_value(segment);
            return self;
        }

        const auto f = split->feature;
        const double thr = split->threshold;
        auto mid = std::partition(samples.begin() + std::ptrdiff_t(begin), samples.begin() + std::ptrdiff_t(end),
                                  [&](std::size_t r) { return _data.at(r, f) <= thr; });
        const std::size_t split_at = std::size_t(mid - samples.begin());
        _importance[f] += split->impurity_decrease;

        const int left = grow(samples, begin, split_at, nodes);
        const int right = grow(samples, split_at, end, nodes);
        auto& node = nodes[self];
        node.feature = static_cast<int>(f);
        node.threshold = thr;
        node.left = left;
        node.right = right;
        return self;
    }

    const Dataset& _data;
    const ForestConfig& _config;
    Rng _rng;
    std::vector<double> _importance;
    std::size_t _candidateCount;
    std::vector<std::size_t> _pool;
    std::vector<std::size_t> _candidates;
    std::vector<std::size_t> _leafRows;
    SplitScratch _scratch;
};

void check_schema(const ForestModel& model, const Dataset& data)
{
    if (data.feature_names != model.feature_names) {
        throw DataError("Feature schema mismatch: model expects {} features, data has {}{}", model.feature_names.size(),
                        data.feature_names.size(),
                        data.feature_names.size() == model.feature_names.size() ? " with different names or order" : "");
    }
}

double r2_score(std::span<const double> obs, std::span<const double> pred)
{
    double mean = 0.0;
    for (double o : obs) {
        mean += o;
    }
    mean /= double(obs.size());
    double ssRes = 0.0;
    double ssTot = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        ssRes += (obs[i] - pred[i]) * (obs[i] - pred[i]);
        ssTot += (obs[i] - mean) * (obs[i] - mean);
    }
    return 1.0 - ssRes / ssTot;
}

}

std::optional<SplitChoice> best_split(const Dataset& data, std::span<const std::size_t> samples,
                                      std::span<const std::size_t> candidateFeatures, int minSamplesLeaf)
{
    std::vector<std::size_t> sorted(candidateFeatures.begin(), candidateFeatures.end());
    std::sort(sorted.begin(), sorted.end());
    SplitScratch scratch;
    return find_split(data, samples, sorted, minSamplesLeaf, scratch);
}

ForestModel fit(const Dataset& data, const ForestConfig& config, int threads)
{
    config.validate();
    data.validate(true);

    ForestModel model;
    model.config = config;
    model.feature_names = data.feature_names;
    model.n_training_rows = data.n_rows;
    const auto [lo, hi] = std::minmax_element(data.target.begin(), data.target.end());
    model.target_min = *lo;
    model.target_max = *hi;

    const auto nTrees = std::size_t(config.n_estimators);
    model.trees.resize(nTrees);
    std::vector<std::vector<double>> importances(nTrees);
    parallel_for(nTrees, threads, [&](std::size_t t) {
        const auto seed = derive_seed(config.seed, t);
        TreeBuilder builder(data, config, seed);
        model.trees[t] = builder.build(seed);
        importances[t] = builder.importance();
    });

    model.impurity_decrease.assign(data.n_features(), 0.0);
    for (const auto& imp : importances) {
        for (std::size_t f = 0; f < imp.size(); ++f) {
            model.impurity_decrease[f] += imp[f];
        }
    }
    return model;
}

std::vector<double> predict(const ForestModel& model, const Dataset& data, int threads)
{
    check_schema(model, data);
    std::vector<double> out(data.n_rows, 0.0);
    if (model.trees.empty() || data.n_rows == 0) {
        return out;
    }
    constexpr std::size_t chunk = 256;
    const std::size_t chunks = (data.n_rows + chunk - 1) / chunk;
    const double nTrees = double(model.trees.size());
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(data.n_rows, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
            double sum = 0.0;
            for (const auto& tree : model.trees) {
                sum += tree.predict(data, i);
            }
            out[i] = std::clamp(sum / nTrees, model.target_min, model.target_max);
        }
    });
    return out;
}

std::vector<double> gini_importance(const ForestModel& model)
{
    std::vector<double> out(model.impurity_decrease.size(), 0.0);
    if (model.trees.empty()) {
        return out;
    }
    double total = 0.0;
    for (std::size_t f = 0; f < out.size(); ++f) {
        out[f] = model.impurity_decrease[f] / double(model.trees.size());
        total += out[f];
    }
    if (total > 0.0) {
        for (auto& v : out) {
            v /= total;
        }
    }
    return out;
}

std::vector<PermutationScore> permutation_importance(const ForestModel& model, const Dataset& test, int repeats,
                                                     std::uint64_t seed, int threads)
{
    if (repeats < 1) {
        throw InvalidArgument("Permutation repeats must be >= 1, got {}", repeats);
    }
    test.validate(true);
    check_schema(model, test);
    const auto [lo, hi] = std::minmax_element(test.target.begin(), test.target.end());
    if (*lo == *hi) {
        throw DataError("Permutation importance needs test targets with non-zero variance");
    }

    const double baseline = r2_score(test.target, predict(model, test, threads));
    std::vector<PermutationScore> out(test.n_features());
    Dataset shuffled = test;
    for (std::size_t f = 0; f < test.n_features(); ++f) {
        std::vector<double> drops;
        drops.reserve(std::size_t(repeats));
        for (int r = 0; r < repeats; ++r) {
            auto col = shuffled.column(f);
            Rng rng(derive_seed(seed, f, std::uint64_t(r)));
            rng.shuffle(col);
            drops.push_back(baseline - r2_score(test.target, predict(model, shuffled, threads)));
            std::copy(test.column(f).begin(), test.column(f).end(), col.begin());
        }
        double mean = 0.0;
        for (double d : drops) {
            mean += d;
        }
        mean /= double(drops.size());
        double var = 0.0;
        for (double d : drops) {
            var += (d - mean) * (d - mean);
        }
        out[f] = PermutationScore{mean, std::sqrt(var / double(drops.size()))};
    }
    return out;
}

ImportanceReport importance_report(const ForestModel& model, const Dataset& test, int repeats, std::uint64_t seed, int threads)
{
    ImportanceReport r;
    r.feature_names = model.feature_names;
    r.gini = gini_importance(model);
    r.permutation = permutation_importance(model, test, repeats, seed, threads);
    return r;
}

void write_importance_csv(const ImportanceReport& report, const fs::path& path)
{
    auto out = open_output(path);
    out << "feature,gini,permutation_mean,permutation_std\n";
    for (std::size_t f = 0; f < report.feature_names.size(); ++f) {
        out << report.feature_names[f] << ',' << format_double(report.gini[f]) << ','
            << format_double(report.permutation[f].mean) << ',' << format_double(report.permutation[f].stdev) << '\n';
    }
}

namespace {

constexpr std::string_view s_modelMagic = "aqf-forest";
constexpr int s_modelVersion = 1;

void write_nodes(std::ostream& out, const std::vector<TreeNode>& nodes, int i)
{
    const auto& n = nodes[std::size_t(i)];
    if (n.is_leaf()) {
        out << "L " << format_double(n.value) << ' ' << n.n_samples << '\n';
        return;
    }
    out << "S " << n.feature << ' ' << format_double(n.threshold) << ' ' << n.n_samples << '\n';
    write_nodes(out, nodes, n.left);
    write_nodes(out, nodes, n.right);
}

class ModelParser
{
public:
    explicit ModelParser(std::string_view text)
    : _lines(split(text, '\n'))
    {
    }

    std::vector<std::string_view> next_tokens(std::string_view expectKey = {})
    {
        while (_pos < _lines.size()) {
            auto line = trim(_lines[_pos++]);
            if (line.empty()) {
                continue;
            }
            std::vector<std::string_view> tokens;
            for (auto tok : split(line, ' ')) {
                if (!tok.empty()) {
                    tokens.push_back(tok);
                }
            }
            if (!expectKey.empty() && tokens.front() != expectKey) {
                fail(fmt::format("expected '{}', found '{}'", expectKey, tokens.front()));
            }
            return tokens;
        }
        fail("unexpected end of model file");
    }

    std::string_view next_line()
    {
        if (_pos >= _lines.size()) {
            fail("unexpected end of model file");
        }
        return trim(_lines[_pos++]);
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw DataError("Model file line {}: {}", _pos, what);
    }

    double number(std::string_view tok) const
    {
        auto v = try_parse_double(tok);
        if (!v) {
            fail(fmt::format("bad number '{}'", tok));
        }
        return *v;
    }

    std::int64_t integer(std::string_view tok) const
    {
        auto v = try_parse_int(tok);
        if (!v) {
            fail(fmt::format("bad integer '{}'", tok));
        }
        return *v;
    }

    std::uint64_t unsigned_integer(std::string_view tok) const
    {
        std::uint64_t v = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
            fail(fmt::format("bad unsigned integer '{}'", tok));
        }
        return v;
    }

    std::vector<std::string_view> keyed(std::string_view key, std::size_t count)
    {
        auto t = next_tokens(key);
        if (t.size() != count + 1) {
            fail(fmt::format("'{}' expects {} value(s)", key, count));
        }
        return t;
    }

    int read_node(std::vector<TreeNode>& nodes, std::size_t featureCount, int depth)
    {
        if (depth > 100000) {
            fail("tree too deep");
        }
        auto t = next_tokens();
        const int self = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (t[0] == "L" && t.size() == 3) {
            nodes[std::size_t(self)].value = number(t[1]);
            nodes[std::size_t(self)].n_samples = std::size_t(integer(t[2]));
            return self;
        }
        if (t[0] != "S" || t.size() != 4) {
            fail("malformed tree node");
        }
        const auto feature = integer(t[1]);
        if (feature < 0 || std::size_t(feature) >= featureCount) {
            fail(fmt::format("feature index {} out of range", feature));
        }
        const double threshold = number(t[2]);
        const auto n = std::size_t(integer(t[3]));
        const int left = read_node(nodes, featureCount, depth + 1);
        const int right = read_node(nodes, featureCount, depth + 1);
        auto& node = nodes[std::size_t(self)];
        node.feature = static_cast<int>(feature);
        node.threshold = threshold;
        node.n_samples = n;
        node.left = left;
        node.right = right;
        return self;
    }

private:
    std::vector<std::string_view> _lines;
    std::size_t _pos = 0;
};

}

std::string serialize_model(const ForestModel& model)
{
    std::ostringstream out;
    const auto& c = model.config;
    out << s_modelMagic << ' ' << s_modelVersion << '\n';
    out << "n_estimators " << c.n_estimators << '\n';
    out << "max_features " << max_features_name(c.max_features) << '\n';
    out << "min_samples_split " << c.min_samples_split << '\n';
    out << "min_samples_leaf " << c.min_samples_leaf << '\n';
    out << "bootstrap " << (c.bootstrap ? 1 : 0) << '\n';
    out << "seed " << c.seed << '\n';
    out << "n_training_rows " << model.n_training_rows << '\n';
    out << "target_range " << format_double(model.target_min) << ' ' << format_double(model.target_max) << '\n';
    out << "features " << model.feature_names.size() << '\n';
    for (const auto& name : model.feature_names) {
        out << name << '\n';
    }
    out << "impurity_decrease";
    for (double v : model.impurity_decrease) {
        out << ' ' << format_double(v);
    }
    out << '\n';
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& tree = model.trees[t];
        out << "tree " << t << ' ' << tree.seed << ' ' << tree.nodes.size() << '\n';
        if (!tree.nodes.empty()) {
            write_nodes(out, tree.nodes, 0);
        }
    }
    out << "end\n";
    return out.str();
}

ForestModel deserialize_model(std::string_view text)
{
    ModelParser p(text);
    auto magic = p.next_tokens(s_modelMagic);
    if (magic.size() != 2 || p.integer(magic[1]) != s_modelVersion) {
        p.fail("unsupported model format version");
    }

    ForestModel m;
    m.config.n_estimators = static_cast<int>(p.integer(p.keyed("n_estimators", 1)[1]));
    try {
        m.config.max_features = parse_max_features(p.keyed("max_features", 1)[1]);
    } catch (const InvalidArgument& e) {
        p.fail(e.what());
    }
    m.config.min_samples_split = static_cast<int>(p.integer(p.keyed("min_samples_split", 1)[1]));
    m.config.min_samples_leaf = static_cast<int>(p.integer(p.keyed("min_samples_leaf", 1)[1]));
    m.config.bootstrap = p.integer(p.keyed("bootstrap", 1)[1]) != 0;
    m.config.seed = p.unsigned_integer(p.keyed("seed", 1)[1]);
    m.n_training_rows = std::size_t(p.integer(p.keyed("n_training_rows", 1)[1]));
    auto range = p.keyed("target_range", 2);
    m.target_min = p.number(range[1]);
    m.target_max = p.number(range[2]);
    const auto nFeatures = p.integer(p.keyed("features", 1)[1]);
    if (nFeatures <= 0) {
        p.fail("model needs at least one feature");
    }
    for (std::int64_t f = 0; f < nFeatures; ++f) {
        m.feature_names.emplace_back(p.next_line());
    }
    auto imp = p.keyed("impurity_decrease", std::size_t(nFeatures));
    for (std::size_t i = 1; i < imp.size(); ++i) {
        m.impurity_decrease.push_back(p.number(imp[i]));
    }
    try {
        m.config.validate();
    } catch (const InvalidArgument& e) {
        p.fail(e.what());
    }

    for (int t = 0; t < m.config.n_estimators; ++t) {
        auto header = p.keyed("tree", 3);
        if (p.integer(header[1]) != t) {
            p.fail(fmt::format("expected tree {}", t));
        }
        RegressionTree tree;
        tree.seed = p.unsigned_integer(header[2]);
        const auto nodeCount = p.integer(header[3]);
        tree.nodes.reserve(std::size_t(std::max<std::int64_t>(nodeCount, 0)));
        p.read_node(tree.nodes, m.feature_names.size(), 0);
        if (std::int64_t(tree.nodes.size()) != nodeCount) {
            p.fail(fmt::format("tree {} declares {} nodes, found {}", t, nodeCount, tree.nodes.size()));
        }
        m.trees.push_back(std::move(tree));
    }
    p.next_tokens("end");
    return m;
}

void save_model(const ForestModel& model, const fs::path& path)
{
    auto out = open_output(path);
    out << serialize_model(model);
}

ForestModel load_model(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("Cannot open model '{}'", path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_model(text);
    } catch (const DataError& e) {
        throw DataError("'{}': {}", path.string(), e.what());
    }
}

}
