#pragma once

#include "aqf/dataset.hpp"
#include "aqf/textio.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aqf {

/// Dense numeric training/evaluation matrix, column-major.
///
/// `groups` optionally tags every row with its station id so that rows can be
/// held out per station.
struct Dataset
{
    std::vector<std::string> feature_names;
    std::size_t n_rows = 0;
    std::vector<double> columns; // columns[f * n_rows + i]
    std::vector<double> target;
    std::vector<std::string> groups;

    static Dataset from_columns(std::vector<std::string> names, const std::vector<std::vector<double>>& cols, std::vector<double> target);

    /// Converts a feature table. Rows without a target are an error unless
    /// `requireTarget` is false, in which case the target vector stays empty.
    static Dataset from_table(const FeatureTable& table, bool requireTarget = true);

    std::size_t n_features() const noexcept { return feature_names.size(); }
    bool has_target() const noexcept { return target.size() == n_rows && n_rows > 0; }

    double at(std::size_t row, std::size_t feature) const noexcept { return columns[feature * n_rows + row]; }
    std::span<const double> column(std::size_t feature) const noexcept { return {columns.data() + feature * n_rows, n_rows}; }
    std::span<double> column(std::size_t feature) noexcept { return {columns.data() + feature * n_rows, n_rows}; }

    Dataset subset(std::span<const std::size_t> rows) const;

    /// Throws DataError on empty data, shape mismatches or non-finite values.
    void validate(bool requireTarget = true) const;
};

enum class MaxFeatures
{
    all, // every feature at every node ('auto')
    sqrt,
    log2,
};

std::string_view max_features_name(MaxFeatures m) noexcept;
/// Accepts `all`, `auto` (alias of all), `sqrt`, `log2`.
MaxFeatures parse_max_features(std::string_view s);

/// Number of candidate features per node: p, ceil(sqrt(p)) or ceil(log2(p)), at least 1.
std::size_t candidate_feature_count(MaxFeatures mode, std::size_t featureCount) noexcept;

struct ForestConfig
{
    int n_estimators = 300;
    MaxFeatures max_features = MaxFeatures::sqrt;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    std::uint64_t seed = 0;
    /// Test hook: false trains every tree on the full table once.
    bool bootstrap = true;

    void validate() const;
};

/// Internal nodes send x[feature] <= threshold left; leaves carry the mean target.
struct TreeNode
{
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
    std::size_t n_samples = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

/// Regression tree stored in preorder (a left child directly follows its parent).
struct RegressionTree
{
    std::vector<TreeNode> nodes;
    std::uint64_t seed = 0;

    double predict(const Dataset& data, std::size_t row) const noexcept;
    double predict(std::span<const double> features) const noexcept;
    std::size_t split_count() const noexcept;
    bool operator==(const RegressionTree&) const = default;
};

struct ForestModel
{
    ForestConfig config;
    std::vector<std::string> feature_names;
    std::vector<RegressionTree> trees;
    /// Per-feature impurity decrease summed over all trees.
    std::vector<double> impurity_decrease;
    double target_min = 0.0;
    double target_max = 0.0;
    std::size_t n_training_rows = 0;
};

struct SplitChoice
{
    std::size_t feature = 0;
    double threshold = 0.0;
    /// n * Var(parent) - n_left * Var(left) - n_right * Var(right), population variances.
    double impurity_decrease = 0.0;
};

/// Best variance-reduction split of the node holding `samples` (row indices,
/// repeats allowed) over `candidateFeatures`.
///
/// Thresholds are midpoints between consecutive distinct values. Decreases
/// within a relative 1e-12 of the node's total sum of squares are treated as
/// ties and resolved towards the lower feature index, then the lower
/// threshold. nullopt when all targets are equal or nothing beats the
/// tolerance.
std::optional<SplitChoice> best_split(const Dataset& data, std::span<const std::size_t> samples,
                                      std::span<const std::size_t> candidateFeatures, int minSamplesLeaf = 1);

/// Tree i uses an RNG seeded with derive_seed(config.seed, i) for its
/// bootstrap draw and per-node feature sampling, so the model does not depend
/// on the number of threads.
ForestModel fit(const Dataset& data, const ForestConfig& config, int threads = 1);

/// Mean of the tree outputs per row. Throws DataError on a feature schema mismatch.
std::vector<double> predict(const ForestModel& model, const Dataset& data, int threads = 1);

/// Impurity decreases averaged over trees and normalised to sum to 1; all
/// zeros when the forest has no split.
std::vector<double> gini_importance(const ForestModel& model);

struct PermutationScore
{
    double mean = 0.0;
    double stdev = 0.0;
};

/// Drop in R² after shuffling each feature column, `repeats` times per feature.
/// Throws DataError when the test targets have zero variance.
std::vector<PermutationScore> permutation_importance(const ForestModel& model, const Dataset& test, int repeats,
                                                     std::uint64_t seed, int threads = 1);

struct ImportanceReport
{
    std::vector<std::string> feature_names;
    std::vector<double> gini;
    std::vector<PermutationScore> permutation;
};

ImportanceReport importance_report(const ForestModel& model, const Dataset& test, int repeats, std::uint64_t seed, int threads = 1);
void write_importance_csv(const ImportanceReport& report, const fs::path& path);

/// Versioned text format; decimals are written in shortest round-trip form so
/// that load(save(m)) reproduces every threshold and leaf value exactly.
std::string serialize_model(const ForestModel& model);
ForestModel deserialize_model(std::string_view text);
void save_model(const ForestModel& model, const fs::path& path);
ForestModel load_model(const fs::path& path);

}
