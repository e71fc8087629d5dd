#include "aqf/cli.hpp"
#include "aqf/dataset.hpp"
#include "aqf/error.hpp"
#include "aqf/eval.hpp"
#include "aqf/forest.hpp"
#include "aqf/join.hpp"
#include "aqf/mapping.hpp"
#include "aqf/regrid.hpp"
#include "aqf/rng.hpp"
#include "aqf/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

namespace aqf::cli {

namespace {

using Clock = std::chrono::system_clock;

class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

std::string utc_string(Clock::time_point t)
{
    const std::time_t tt = Clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

PollutantKind pollutant_arg(const std::string& s)
{
    try {
        return parse_pollutant(s);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

/// Expands directories to their *.csv files; plain files pass through.
std::vector<fs::path> csv_inputs(const std::vector<std::string>& args)
{
    std::vector<fs::path> out;
    for (const auto& a : args) {
        const fs::path p(a);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".csv") {
                    found.push_back(e.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    if (out.empty()) {
        throw UsageError("No input CSV files found");
    }
    return out;
}

struct Run
{
    std::string subcommand;
    std::vector<fs::path> inputs;
    std::optional<std::uint64_t> seed;
    bool seed_chosen = false;
    fs::path manifest_dir;
    Clock::time_point start = Clock::now();

    void input(const fs::path& p) { inputs.push_back(fs::absolute(p).lexically_normal()); }

    std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t given)
    {
        if (opt->count() > 0) {
            seed = given;
        } else {
            seed = (std::uint64_t(std::random_device{}()) << 32) ^ std::random_device{}();
            seed_chosen = true;
        }
        return *seed;
    }
};

void write_manifest(const Run& run, const CLI::App& sub)
{
    nlohmann::json j;
    j["subcommand"] = run.subcommand;
    j["version"] = std::string(tool_version);
    j["inputs"] = nlohmann::json::array();
    for (const auto& p : run.inputs) {
        j["inputs"].push_back(p.string());
    }
    if (run.seed) {
        j["seed"] = *run.seed;
        j["seed_chosen"] = run.seed_chosen;
    }
    nlohmann::json config = nlohmann::json::object();
    for (const auto* opt : sub.get_options()) {
        if (opt->get_name() == "--help" || opt->get_name().empty()) {
            continue;
        }
        std::string key = opt->get_name();
        key.erase(0, key.find_first_not_of('-'));
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) {
                value += (value.empty() ? "" : " ") + r;
            }
        } else {
            value = opt->get_default_str();
        }
        config[key] = value;
    }
    if (run.seed) {
        config["seed"] = std::to_string(*run.seed);
    }
    j["config"] = config;
    j["start"] = utc_string(run.start);
    j["end"] = utc_string(Clock::now());

    auto out = open_output(run.manifest_dir / (run.subcommand + ".manifest.json"));
    out << j.dump(2) << '\n';
}

/// Config lines are `key = value`; keys mirror long flag names. Values are
/// appended as `--key=value` unless the flag is already on the command line.
void apply_config(std::vector<std::string>& args, const CLI::App& app)
{
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (!path) {
        return;
    }
    std::ifstream in(*path);
    if (!in) {
        throw UsageError(fmt::format("Cannot open config file '{}'", *path));
    }
    const CLI::App* sub = nullptr;
    if (!args.empty()) {
        for (const auto* s : app.get_subcommands({})) {
            if (s->get_name() == args[0]) {
                sub = s;
            }
        }
    }
    if (!sub) {
        return; // CLI11 reports the missing subcommand
    }

    std::vector<std::string> extra;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError(fmt::format("{}:{}: expected 'key = value'", *path, lineNo));
        }
        std::string key(trim(t.substr(0, eq)));
        std::replace(key.begin(), key.end(), '_', '-');
        const std::string value(trim(t.substr(eq + 1)));
        const std::string flag = "--" + key;

        bool known = false;
        for (const auto* s : app.get_subcommands({})) {
            known = known || s->get_option_no_throw(flag) != nullptr;
        }
        if (!known) {
            throw UsageError(fmt::format("{}:{}: unknown key '{}'", *path, lineNo, key));
        }
        if (sub->get_option_no_throw(flag) == nullptr) {
            continue; // belongs to another subcommand
        }
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (!given) {
            extra.push_back(flag + "=" + value);
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
}

struct ForestFlags
{
    int n_estimators = 300;
    std::string max_features;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    bool no_bootstrap = false;
    std::string pollutant = "no2";

    void add(CLI::App* sub)
    {
        sub->add_option("--n-estimators", n_estimators, "Number of trees")->check(CLI::PositiveNumber);
        sub->add_option("--max-features", max_features,
                        "Features tried per split: all|sqrt|log2 ('auto' = all). "
                        "Default sqrt, or all for o3, the best settings found when tuning both pollutants");
        sub->add_option("--min-samples-split", min_samples_split)->check(CLI::Range(2, 1 << 30));
        sub->add_option("--min-samples-leaf", min_samples_leaf)->check(CLI::PositiveNumber);
        sub->add_flag("--no-bootstrap", no_bootstrap, "Grow every tree on the full training set");
        sub->add_option("--pollutant", pollutant, "no2|o3|so2|pm10|pm25, selects the max-features default");
    }

    ForestConfig config(std::uint64_t seed) const
    {
        ForestConfig c;
        c.n_estimators = n_estimators;
        c.min_samples_split = min_samples_split;
        c.min_samples_leaf = min_samples_leaf;
        c.bootstrap = !no_bootstrap;
        c.seed = seed;
        const auto p = pollutant_arg(pollutant);
        if (max_features.empty()) {
            c.max_features = p == PollutantKind::O3 ? MaxFeatures::all : MaxFeatures::sqrt;
        } else {
            try {
                c.max_features = parse_max_features(max_features);
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
        }
        return c;
    }
};

Dataset load_dataset(Run& run, const std::string& path, bool requireTarget = true)
{
    run.input(path);
    return Dataset::from_table(read_table(path), requireTarget);
}

void print_cv(const CvReport& r)
{
    fmt::print("mean r2 {} rmse {} bias {}\n", r.mean_r2 ? format_double(*r.mean_r2) : std::string("undefined"),
               format_double(r.mean_rmse), format_double(r.mean_bias));
}

}

int run(const std::vector<std::string>& argsIn)
{
    CLI::App app{"Ground-level pollutant estimation from satellite columns with a random forest", "aqf"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));
    app.option_defaults()->always_capture_default();

    int threads = 1;
    std::uint64_t seed = 0;
    std::string configPath;
    std::map<const CLI::App*, CLI::Option*> seedOpts;
    auto common = [&](CLI::App* sub, bool stochastic) {
        sub->option_defaults()->always_capture_default();
        sub->add_option("--threads", threads, "Worker threads; 1 is the reference for exact comparisons")
            ->check(CLI::Range(1, 1024));
        sub->add_option("--config", configPath, "Flat 'key = value' file mirroring the flags; flags win")
            ->check(CLI::ExistingFile);
        if (stochastic) {
            seedOpts[sub] = sub->add_option("--seed", seed, "Random seed; a chosen seed is recorded in the manifest when omitted");
        }
    };

    // regrid
    auto* regrid = app.add_subcommand("regrid", "Bin level-2 swath CSVs onto the study grid");
    common(regrid, false);
    std::string gridSpecPath;
    double qa = 0.75;
    double cell = GridSpec::default_cell_size;
    std::string regridPollutant = "no2";
    std::string regridOut = "grids";
    std::vector<std::string> swathFiles;
    regrid->add_option("--spec", gridSpecPath, "Grid spec file")->required()->check(CLI::ExistingFile);
    auto* qaOpt = regrid->add_option("--qa", qa, "Minimum qa value (default 0.75, 0.8 for the aerosol index)")
                      ->check(CLI::Range(0.0, 1.0));
    auto* cellOpt = regrid->add_option("--cell", cell, "Cell size in degrees, overrides the spec file")
                        ->check(CLI::PositiveNumber);
    regrid->add_option("--pollutant", regridPollutant, "no2|o3|so2|pm10|pm25");
    regrid->add_option("--out-dir", regridOut);
    regrid->add_option("swaths", swathFiles, "Swath CSV files or directories")->required()->check(CLI::ExistingPath);

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "Join grids, stations, meteorology and land cover into a table");
    common(build, false);
    std::vector<std::string> gridInputs;
    std::string stationsPath, observationsPath, meteoDir, landcoverPath, buildPollutant = "no2", tableOut = "table.csv";
    int maxGapMinutes = 120;
    build->add_option("--grids", gridInputs, "Grid field CSVs or directories")->required()->check(CLI::ExistingPath);
    build->add_option("--stations", stationsPath)->required()->check(CLI::ExistingFile);
    build->add_option("--observations", observationsPath)->required()->check(CLI::ExistingFile);
    build->add_option("--meteo", meteoDir)->required()->check(CLI::ExistingDirectory);
    build->add_option("--landcover", landcoverPath)->required()->check(CLI::ExistingFile);
    build->add_option("--pollutant", buildPollutant, "no2|o3|so2|pm10|pm25");
    build->add_option("--max-gap-minutes", maxGapMinutes, "Widest observation gap bridged by interpolation")
        ->check(CLI::PositiveNumber);
    build->add_option("--out", tableOut);

    // tune
    auto* tune = app.add_subcommand("tune", "3-fold sweep over n_estimators 50..500 and all|sqrt|log2");
    common(tune, true);
    std::string tuneData, tuneOut = "sweep.csv";
    std::size_t tuneFolds = 3;
    tune->add_option("--data", tuneData)->required()->check(CLI::ExistingFile);
    tune->add_option("--folds", tuneFolds)->check(CLI::Range(2, 1000));
    tune->add_option("--out", tuneOut);

    // train
    auto* train = app.add_subcommand("train", "Fit a forest on a feature table");
    common(train, true);
    ForestFlags trainFlags;
    trainFlags.add(train);
    std::string trainData, modelOut = "model.txt";
    train->add_option("--data", trainData)->required()->check(CLI::ExistingFile);
    train->add_option("--out", modelOut);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Method a: random k-fold; b: train/test years; c: station-blocked k-fold");
    common(evaluate, true);
    ForestFlags evalFlags;
    evalFlags.add(evaluate);
    std::string method, evalData, evalTest, evalStations, evalOut = "report.csv";
    std::size_t k = 10;
    evaluate->add_option("--method", method)->required()->check(CLI::IsMember({"a", "b", "c"}));
    evaluate->add_option("--data", evalData, "Training table (all data for a and c)")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--test", evalTest, "Test table for method b")->check(CLI::ExistingFile);
    evaluate->add_option("--stations", evalStations, "Station metadata for method c")->check(CLI::ExistingFile);
    evaluate->add_option("--k", k, "Folds for methods a and c")->check(CLI::Range(2, 100000));
    evaluate->add_option("--out", evalOut);

    // importance
    auto* importance = app.add_subcommand("importance", "Gini and permutation importance on a held-out 20% split");
    common(importance, true);
    ForestFlags impFlags;
    impFlags.add(importance);
    std::string impData, impTest, impOut = "importance.csv";
    int repeats = 10;
    double testFraction = 0.2;
    importance->add_option("--data", impData)->required()->check(CLI::ExistingFile);
    importance->add_option("--test", impTest, "Use this table as the test set instead of a split")->check(CLI::ExistingFile);
    importance->add_option("--test-fraction", testFraction)->check(CLI::Range(0.01, 0.99));
    importance->add_option("--repeats", repeats, "Permutations per feature")->check(CLI::PositiveNumber);
    importance->add_option("--out", impOut);

    // predict-grid
    auto* predictGrid = app.add_subcommand("predict-grid", "Predict every grid cell for each overpass");
    common(predictGrid, false);
    std::string modelPath, pgMeteo, pgLandcover, elevationPath, pgOut = "predictions";
    std::vector<std::string> pgGrids;
    int stationType = 3;
    predictGrid->add_option("--model", modelPath)->required()->check(CLI::ExistingFile);
    predictGrid->add_option("--grids", pgGrids, "Grid field CSVs or directories")->required()->check(CLI::ExistingPath);
    predictGrid->add_option("--meteo", pgMeteo)->required()->check(CLI::ExistingDirectory);
    predictGrid->add_option("--landcover", pgLandcover)->required()->check(CLI::ExistingFile);
    predictGrid->add_option("--elevation", elevationPath)->required()->check(CLI::ExistingFile);
    predictGrid->add_option("--station-type", stationType, "Station type given to grid cells: 1 industrial, 2 traffic, 3 background")
        ->check(CLI::Range(1, 3));
    predictGrid->add_option("--out-dir", pgOut);

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "Annual mean raster and monthly statistics from prediction layers");
    common(aggregate, false);
    std::vector<std::string> layerInputs;
    std::string aggOut = "aggregate";
    aggregate->add_option("--layers", layerInputs, "Prediction layer CSVs or directories")->required()->check(CLI::ExistingPath);
    aggregate->add_option("--out-dir", aggOut);

    // synth
    auto* synthCmd = app.add_subcommand("synth", "Write a synthetic scenario of raw input files");
    common(synthCmd, true);
    synth::ScenarioOptions scenario;
    std::string synthOut = "synth";
    synthCmd->add_option("--out-dir", synthOut);
    synthCmd->add_option("--stations", scenario.stations)->check(CLI::Range(1, 100000));
    synthCmd->add_option("--days", scenario.days)->check(CLI::Range(1, 366));
    synthCmd->add_option("--year", scenario.year)->check(CLI::Range(1979, 2099));
    synthCmd->add_option("--start-month", scenario.start_month)->check(CLI::Range(1, 12));
    synthCmd->add_option("--grid-cells", scenario.grid_cells, "Cells per side")->check(CLI::Range(1, 2000));
    synthCmd->add_option("--landcover-pixel", scenario.landcover_pixel, "Land-cover pixel size in degrees")
        ->check(CLI::PositiveNumber);
    synthCmd->add_option("--station-effect-sd", scenario.station_effect_sd)->check(CLI::NonNegativeNumber);
    synthCmd->add_option("--target-shift", scenario.target_shift);

    std::vector<std::string> args = argsIn;
    try {
        apply_config(args, app);
    } catch (const UsageError& e) {
        std::cerr << "aqf: " << e.what() << '\n';
        return exit_usage;
    }

    std::vector<std::string> full{"aqf"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : full) {
        argv.push_back(s.data());
    }
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    Run run;
    const CLI::App* active = app.get_subcommands().front();
    run.subcommand = active->get_name();
    if (!configPath.empty()) {
        run.input(configPath);
    }
    auto seedFor = [&](const CLI::App* sub) { return run.resolve_seed(seedOpts.at(sub), seed); };

    try {
        if (active == regrid) {
            const auto pollutant = pollutant_arg(regridPollutant);
            if (qaOpt->count() == 0) {
                qa = default_qa_threshold(pollutant);
            }
            run.input(gridSpecPath);
            auto spec = read_grid_spec(gridSpecPath);
            if (cellOpt->count() > 0) {
                spec = spec.with_cell_size(cell);
            }
            const auto variable = std::string(satellite_variable(pollutant));
            for (const auto& f : csv_inputs(swathFiles)) {
                run.input(f);
                const auto field = bin_swath(read_swath_csv(f), spec, qa, variable, threads);
                if (!field.overpass_time) {
                    log_warning("{}: no samples, skipped", f.string());
                    continue;
                }
                write_grid_field(field, fs::path(regridOut) / (f.stem().string() + ".csv"));
            }
            run.manifest_dir = regridOut;
        } else if (active == build) {
            const auto pollutant = pollutant_arg(buildPollutant);
            std::vector<GridField> fields;
            for (const auto& f : csv_inputs(gridInputs)) {
                run.input(f);
                fields.push_back(read_grid_field(f));
            }
            run.input(stationsPath);
            run.input(observationsPath);
            run.input(meteoDir);
            run.input(landcoverPath);
            const auto metas = read_station_meta_csv(stationsPath);
            const auto series = read_station_series_csv(observationsPath, metas);
            const auto meteo = read_meteo_dir(meteoDir);
            const auto lc = read_landcover_csv(landcoverPath);
            const auto table = build_table(series, fields, meteo, lc, pollutant, std::chrono::minutes(maxGapMinutes));
            write_table(table, tableOut);
            fmt::print("{} rows\n", table.rows.size());
            run.manifest_dir = fs::path(tableOut).parent_path();
        } else if (active == tune) {
            const auto data = load_dataset(run, tuneData);
            SweepOptions opts;
            opts.folds = tuneFolds;
            const auto result = hyperparameter_sweep(data, seedFor(tune), opts, threads);
            write_sweep_csv(result, tuneOut);
            run.manifest_dir = fs::path(tuneOut).parent_path();
        } else if (active == train) {
            const auto config = trainFlags.config(seedFor(train));
            const auto data = load_dataset(run, trainData);
            save_model(fit(data, config, threads), modelOut);
            run.manifest_dir = fs::path(modelOut).parent_path();
        } else if (active == evaluate) {
            const auto config = evalFlags.config(seedFor(evaluate));
            const auto data = load_dataset(run, evalData);
            if (method == "a") {
                const auto report = run_method_a(data, config, k, threads);
                write_cv_report(report, evalOut);
                print_cv(report);
            } else if (method == "b") {
                if (evalTest.empty()) {
                    throw UsageError("--method b needs --test");
                }
                const auto test = load_dataset(run, evalTest);
                const auto m = run_method_b(data, test, config, threads);
                write_metrics_report(m, evalOut);
                fmt::print("r2 {} rmse {} bias {}\n", format_double(m.r2), format_double(m.rmse), format_double(m.bias));
            } else {
                if (evalStations.empty()) {
                    throw UsageError("--method c needs --stations");
                }
                run.input(evalStations);
                const auto stations = read_station_meta_csv(evalStations);
                const auto report = run_method_c(data, stations, config, k, threads);
                write_cv_report(report, evalOut);
                print_cv(report);
            }
            run.manifest_dir = fs::path(evalOut).parent_path();
        } else if (active == importance) {
            const auto config = impFlags.config(seedFor(importance));
            const auto data = load_dataset(run, impData);
            Dataset trainSet, testSet;
            if (!impTest.empty()) {
                trainSet = data;
                testSet = load_dataset(run, impTest);
            } else {
                std::vector<std::size_t> idx(data.n_rows);
                std::iota(idx.begin(), idx.end(), std::size_t(0));
                Rng rng(derive_seed(config.seed, 0x5eed));
                rng.shuffle(std::span(idx));
                const auto nTest = std::max<std::size_t>(1, std::size_t(std::llround(testFraction * double(data.n_rows))));
                if (nTest >= data.n_rows) {
                    throw DataError("Table has too few rows ({}) for a train/test split", data.n_rows);
                }
                std::vector<std::size_t> testIdx(idx.begin(), idx.begin() + std::ptrdiff_t(nTest));
                std::vector<std::size_t> trainIdx(idx.begin() + std::ptrdiff_t(nTest), idx.end());
                std::sort(testIdx.begin(), testIdx.end());
                std::sort(trainIdx.begin(), trainIdx.end());
                trainSet = data.subset(trainIdx);
                testSet = data.subset(testIdx);
            }
            const auto model = fit(trainSet, config, threads);
            const auto report = importance_report(model, testSet, repeats, config.seed, threads);
            write_importance_csv(report, impOut);
            run.manifest_dir = fs::path(impOut).parent_path();
        } else if (active == predictGrid) {
            run.input(modelPath);
            run.input(pgMeteo);
            run.input(pgLandcover);
            run.input(elevationPath);
            const auto model = load_model(modelPath);
            const auto meteo = read_meteo_dir(pgMeteo);
            const auto lc = read_landcover_csv(pgLandcover);
            const auto elevation = read_elevation_csv(elevationPath);
            std::optional<PredictionGrid> grid;
            for (const auto& f : csv_inputs(pgGrids)) {
                run.input(f);
                const auto field = read_grid_field(f);
                if (!grid) {
                    grid = prepare_prediction_grid(field.spec, lc, elevation, station_type_from_code(stationType));
                } else if (!(grid->spec == field.spec)) {
                    throw DataError("{}: grid spec differs from the first grid field", f.string());
                }
                const auto layer = predict_layer(model, *grid, field, meteo, threads);
                const auto stem = f.stem().string();
                write_prediction_layer(layer, fs::path(pgOut) / (stem + ".csv"));
                write_ascii_grid(layer.raster, fs::path(pgOut) / (stem + ".asc"));
            }
            run.manifest_dir = pgOut;
        } else if (active == aggregate) {
            std::vector<PredictionLayer> layers;
            for (const auto& f : csv_inputs(layerInputs)) {
                run.input(f);
                layers.push_back(read_prediction_layer(f));
            }
            std::sort(layers.begin(), layers.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
            write_ascii_grid(annual_mean(layers), fs::path(aggOut) / "annual_mean.asc");
            const auto values = layer_values(layers);
            write_monthly_stats_csv(monthly_stats(values), fs::path(aggOut) / "monthly_stats.csv");
            run.manifest_dir = aggOut;
        } else if (active == synthCmd) {
            scenario.seed = seedFor(synthCmd);
            synth::write_scenario(synthOut, scenario);
            run.manifest_dir = synthOut;
        }
        write_manifest(run, *active);
    } catch (const UsageError& e) {
        std::cerr << "aqf " << run.subcommand << ": " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "aqf " << run.subcommand << ": " << e.what() << '\n';
        return exit_data;
    }
    return exit_ok;
}

int run(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args);
}

}
