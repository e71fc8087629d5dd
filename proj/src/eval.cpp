#include "aqf/eval.hpp"
#include "aqf/error.hpp"
#include "aqf/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace aqf {

PartialMetrics compute_partial_metrics(std::span<const double> obs, std::span<const double> pred)
{
    if (obs.size() != pred.size()) {
        throw InvalidArgument("{} observations for {} predictions", obs.size(), pred.size());
    }
    if (obs.empty()) {
        throw InvalidArgument("Metrics need at least one sample");
    }
    const double n = double(obs.size());
    double obsMean = 0.0;
    double biasSum = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!std::isfinite(obs[i]) || !std::isfinite(pred[i])) {
            throw InvalidArgument("Non-finite value at sample {}", i);
        }
        obsMean += obs[i];
        biasSum += pred[i] - obs[i];
    }
    obsMean /= n;

    double ssRes = 0.0;
    double ssTot = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        ssRes += (obs[i] - pred[i]) * (obs[i] - pred[i]);
        ssTot += (obs[i] - obsMean) * (obs[i] - obsMean);
    }

    PartialMetrics m;
    m.n = obs.size();
    m.rmse = std::sqrt(ssRes / n);
    m.bias = biasSum / n;
    if (obs.size() >= 2 && ssTot > 0.0) {
        m.r2 = 1.0 - ssRes / ssTot;
    }
    return m;
}

MetricsReport compute_metrics(std::span<const double> obs, std::span<const double> pred)
{
    const auto m = compute_partial_metrics(obs, pred);
    if (!m.r2) {
        throw DataError("R² undefined: observations have zero variance (N = {})", m.n);
    }
    return MetricsReport{*m.r2, m.rmse, m.bias};
}

FoldAssignment kfold_random(std::size_t n, std::size_t k, std::uint64_t seed)
{
    if (k == 0) {
        throw InvalidArgument("Number of folds must be positive");
    }
    if (k > n) {
        throw InvalidArgument("Cannot split {} samples into {} folds", n, k);
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    Rng rng(seed);
    rng.shuffle(std::span(perm));

    FoldAssignment out;
    out.folds.resize(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        out.folds[f].assign(perm.begin() + std::ptrdiff_t(pos), perm.begin() + std::ptrdiff_t(pos + size));
        std::sort(out.folds[f].begin(), out.folds[f].end());
        pos += size;
    }
    return out;
}

namespace {

std::uint32_t spread_bits(std::uint16_t v) noexcept
{
    std::uint32_t x = v;
    x = (x | (x << 8)) & 0x00FF00FFu;
    x = (x | (x << 4)) & 0x0F0F0F0Fu;
    x = (x | (x << 2)) & 0x33333333u;
    x = (x | (x << 1)) & 0x55555555u;
    return x;
}

std::uint16_t quantize(double v, double lo, double hi) noexcept
{
    if (!(hi > lo)) {
        return 0;
    }
    const double q = std::round((v - lo) / (hi - lo) * 65535.0);
    return static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
}

}

std::uint32_t morton_code(std::uint16_t latQ, std::uint16_t lonQ) noexcept
{
    return spread_bits(lonQ) | (spread_bits(latQ) << 1);
}

StationFolds station_folds(std::span<const StationMeta> stations, std::size_t k, std::uint64_t seed)
{
    if (k == 0) {
        throw InvalidArgument("Number of folds must be positive");
    }
    if (k > stations.size()) {
        throw InvalidArgument("Cannot split {} stations into {} folds", stations.size(), k);
    }
    std::unordered_set<std::string> ids;
    double latLo = 90.0, latHi = -90.0, lonLo = 180.0, lonHi = -180.0;
    for (const auto& s : stations) {
        if (!ids.insert(s.station_id).second) {
            throw InvalidArgument("Duplicate station_id '{}'", s.station_id);
        }
        latLo = std::min(latLo, s.location.latitude);
        latHi = std::max(latHi, s.location.latitude);
        lonLo = std::min(lonLo, s.location.longitude);
        lonHi = std::max(lonHi, s.location.longitude);
    }

    struct Keyed
    {
        std::uint32_t code;
        const std::string* id;
    };
    std::vector<Keyed> order;
    order.reserve(stations.size());
    for (const auto& s : stations) {
        order.push_back({morton_code(quantize(s.location.latitude, latLo, latHi), quantize(s.location.longitude, lonLo, lonHi)), &s.station_id});
    }
    std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
        return a.code != b.code ? a.code < b.code : *a.id < *b.id;
    });

    StationFolds out;
    out.folds.resize(k);
    const std::size_t start = std::size_t(seed % k);
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.folds[(start + i) % k].push_back(*order[i].id);
    }
    return out;
}

CvReport cross_validate(const Dataset& data, const std::vector<std::vector<std::size_t>>& testRows,
                        const ForestConfig& config, int threads)
{
    data.validate(true);
    CvReport report;
    std::vector<char> isTest(data.n_rows);
    double r2Sum = 0.0;
    std::size_t r2Count = 0;

    for (std::size_t f = 0; f < testRows.size(); ++f) {
        std::fill(isTest.begin(), isTest.end(), 0);
        for (auto r : testRows[f]) {
            isTest.at(r) = 1;
        }
        std::vector<std::size_t> trainRows;
        for (std::size_t r = 0; r < data.n_rows; ++r) {
            if (!isTest[r]) {
                trainRows.push_back(r);
            }
        }
        if (trainRows.empty() || testRows[f].empty()) {
            throw DataError("Fold {} has an empty {} set", f + 1, trainRows.empty() ? "training" : "test");
        }

        ForestConfig foldConfig = config;
        foldConfig.seed = derive_seed(config.seed, f);
        const auto model = fit(data.subset(trainRows), foldConfig, threads);
        const auto test = data.subset(testRows[f]);
        const auto pred = predict(model, test, threads);
        const auto m = compute_partial_metrics(test.target, pred);

        FoldReport fr;
        fr.fold = f + 1;
        fr.n_train = trainRows.size();
        fr.n_test = test.n_rows;
        fr.r2 = m.r2;
        fr.rmse = m.rmse;
        fr.bias = m.bias;
        if (m.r2) {
            r2Sum += *m.r2;
            ++r2Count;
        } else {
            log_warning("Fold {}: test targets have zero variance, R² excluded from the mean", f + 1);
        }
        report.mean_rmse += m.rmse;
        report.mean_bias += m.bias;
        report.folds.push_back(fr);
    }
    if (!report.folds.empty()) {
        report.mean_rmse /= double(report.folds.size());
        report.mean_bias /= double(report.folds.size());
    }
    if (r2Count > 0) {
        report.mean_r2 = r2Sum / double(r2Count);
    }
    return report;
}

CvReport run_method_a(const Dataset& data, const ForestConfig& config, std::size_t k, int threads)
{
    if (data.n_rows < k) {
        throw DataError("Method A needs at least {} rows, table has {}", k, data.n_rows);
    }
    return cross_validate(data, kfold_random(data.n_rows, k, config.seed).folds, config, threads);
}

MetricsReport run_method_b(const Dataset& train, const Dataset& test, const ForestConfig& config, int threads)
{
    if (train.feature_names != test.feature_names) {
        throw DataError("Training and test tables have different feature schemas");
    }
    test.validate(true);
    const auto model = fit(train, config, threads);
    const auto pred = predict(model, test, threads);
    return compute_metrics(test.target, pred);
}

std::vector<std::vector<std::size_t>> rows_for_station_folds(const Dataset& data, const StationFolds& folds)
{
    if (data.groups.size() != data.n_rows) {
        throw DataError("Station-blocked evaluation needs a station id for every row");
    }
    std::unordered_map<std::string, std::size_t> foldOf;
    for (std::size_t f = 0; f < folds.folds.size(); ++f) {
        for (const auto& id : folds.folds[f]) {
            foldOf.emplace(id, f);
        }
    }
    std::vector<std::vector<std::size_t>> rows(folds.folds.size());
    for (std::size_t r = 0; r < data.n_rows; ++r) {
        auto it = foldOf.find(data.groups[r]);
        if (it == foldOf.end()) {
            throw DataError("Row {} belongs to station '{}' missing from the station list", r + 1, data.groups[r]);
        }
        rows[it->second].push_back(r);
    }
    return rows;
}

CvReport run_method_c(const Dataset& data, std::span<const StationMeta> stations, const ForestConfig& config,
                      std::size_t k, int threads)
{
    if (stations.size() < k) {
        throw DataError("Method C needs at least {} stations, got {}", k, stations.size());
    }
    const auto folds = station_folds(stations, k, config.seed);
    return cross_validate(data, rows_for_station_folds(data, folds), config, threads);
}

SweepResult hyperparameter_sweep(const Dataset& data, std::uint64_t seed, const SweepOptions& options, int threads)
{
    data.validate(true);
    if (data.n_rows < options.folds) {
        throw DataError("Sweep needs at least {} rows, table has {}", options.folds, data.n_rows);
    }
    const auto folds = kfold_random(data.n_rows, options.folds, seed);

    SweepResult result;
    for (auto mode : options.modes) {
        for (int n : options.n_estimators) {
            ForestConfig config;
            config.n_estimators = n;
            config.max_features = mode;
            config.seed = seed;

            const auto start = std::chrono::steady_clock::now();
            const auto report = cross_validate(data, folds.folds, config, threads);
            const auto stop = std::chrono::steady_clock::now();

            double mse = 0.0;
            for (const auto& f : report.folds) {
                mse += f.rmse * f.rmse;
            }
            mse /= double(report.folds.size());
            const double seconds = std::chrono::duration<double>(stop - start).count();
            result.entries.push_back(SweepEntry{n, mode, mse, std::max(seconds, 1e-9)});
        }
    }
    return result;
}

void write_cv_report(const CvReport& report, const fs::path& path)
{
    auto out = open_output(path);
    out << "fold,r2,rmse,bias\n";
    for (const auto& f : report.folds) {
        out << f.fold << ',' << (f.r2 ? format_double(*f.r2) : std::string()) << ',' << format_double(f.rmse) << ','
            << format_double(f.bias) << '\n';
    }
    out << "mean," << (report.mean_r2 ? format_double(*report.mean_r2) : std::string()) << ','
        << format_double(report.mean_rmse) << ',' << format_double(report.mean_bias) << '\n';
}

void write_metrics_report(const MetricsReport& report, const fs::path& path)
{
    auto out = open_output(path);
    out << "fold,r2,rmse,bias\n";
    const auto line = fmt::format("{},{},{}", format_double(report.r2), format_double(report.rmse), format_double(report.bias));
    out << "1," << line << '\n';
    out << "mean," << line << '\n';
}

void write_sweep_csv(const SweepResult& result, const fs::path& path)
{
    auto out = open_output(path);
    out << "n_estimators,max_features,mean_mse,seconds\n";
    for (const auto& e : result.entries) {
        out << e.n_estimators << ',' << max_features_name(e.max_features) << ',' << format_double(e.mean_mse) << ','
            << format_double(e.seconds) << '\n';
    }
}

}
