#pragma once

#include "aqf/core.hpp"
#include "aqf/forest.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aqf {

struct MetricsReport
{
    double r2 = 0.0;
    double rmse = 0.0; // µg/m³
    double bias = 0.0; // µg/m³, mean(p - o); positive means overestimation
};

/// rmse and bias are always defined; r2 is absent when the observations have
/// zero variance.
struct PartialMetrics
{
    std::optional<double> r2;
    double rmse = 0.0;
    double bias = 0.0;
    std::size_t n = 0;
};

/// Throws InvalidArgument on length mismatch, empty or non-finite input.
PartialMetrics compute_partial_metrics(std::span<const double> observations, std::span<const double> predictions);

/// Throws DataError when R² is undefined (fewer than two observations or
/// all observations equal).
MetricsReport compute_metrics(std::span<const double> observations, std::span<const double> predictions);

/// Disjoint test sets covering the universe, sizes differing by at most one.
struct FoldAssignment
{
    std::vector<std::vector<std::size_t>> folds;

    std::size_t size() const noexcept { return folds.size(); }
};

/// Seeded shuffle of 0..n-1 cut into k contiguous blocks; the first n % k
/// blocks hold one extra index. Indices within a fold are sorted.
FoldAssignment kfold_random(std::size_t n, std::size_t k, std::uint64_t seed);

struct StationFolds
{
    std::vector<std::vector<std::string>> folds;
};

/// 32-bit Morton code of (lat, lon) quantised to 16 bits each over the
/// stations' bounding box; longitude bits in even positions, latitude in odd.
std::uint32_t morton_code(std::uint16_t latQ, std::uint16_t lonQ) noexcept;

/// Stations sorted by Morton code (ties by station_id) and dealt round-robin
/// into k folds, starting at fold seed % k.
StationFolds station_folds(std::span<const StationMeta> stations, std::size_t k, std::uint64_t seed);

struct FoldReport
{
    std::size_t fold = 0; // 1-based
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::optional<double> r2; // absent for zero-variance folds
    double rmse = 0.0;
    double bias = 0.0;
};

struct CvReport
{
    std::vector<FoldReport> folds;
    std::optional<double> mean_r2; // over folds with a defined r2
    double mean_rmse = 0.0;
    double mean_bias = 0.0;
};

/// Trains on the complement of each test set and scores the held-out rows.
/// Fold i trains with seed derive_seed(config.seed, i).
CvReport cross_validate(const Dataset& data, const std::vector<std::vector<std::size_t>>& testRows,
                        const ForestConfig& config, int threads = 1);

/// Random k-fold CV over rows (folds from kfold_random with config.seed).
CvReport run_method_a(const Dataset& data, const ForestConfig& config, std::size_t k = 10, int threads = 1);

/// Train on one year, test on another.
MetricsReport run_method_b(const Dataset& train, const Dataset& test, const ForestConfig& config, int threads = 1);

/// Station-blocked k-fold CV: every row of a test station is held out.
/// Rows are matched to stations through `data.groups`.
CvReport run_method_c(const Dataset& data, std::span<const StationMeta> stations, const ForestConfig& config,
                      std::size_t k = 10, int threads = 1);

/// Row indices held out per fold for station folds.
std::vector<std::vector<std::size_t>> rows_for_station_folds(const Dataset& data, const StationFolds& folds);

struct SweepEntry
{
    int n_estimators = 0;
    MaxFeatures max_features = MaxFeatures::sqrt;
    double mean_mse = 0.0;
    double seconds = 0.0;
};

struct SweepResult
{
    std::vector<SweepEntry> entries;
};

struct SweepOptions
{
    std::vector<int> n_estimators{50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
    std::vector<MaxFeatures> modes{MaxFeatures::all, MaxFeatures::sqrt, MaxFeatures::log2};
    std::size_t folds = 3;
};

/// 3-fold CV mean squared error and wall-clock seconds for every
/// (n_estimators, max_features) pair. Entries run one after another; the same
/// folds are used for every entry.
SweepResult hyperparameter_sweep(const Dataset& data, std::uint64_t seed, const SweepOptions& options = {}, int threads = 1);

/// `fold,r2,rmse,bias` with a final `mean` row; undefined r2 is left empty.
void write_cv_report(const CvReport& report, const fs::path& path);
void write_metrics_report(const MetricsReport& report, const fs::path& path);
/// `n_estimators,max_features,mean_mse,seconds`.
void write_sweep_csv(const SweepResult& result, const fs::path& path);

}
