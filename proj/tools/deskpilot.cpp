// deskpilot: one binary wiring the whole pipeline — demonstration collection,
// dataset balancing, training, closed-loop evaluation, robustness experiment
// suites, activation dumps, and prediction analysis.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deskpilot/augment.hpp"
#include "deskpilot/control.hpp"
#include "deskpilot/dataset.hpp"
#include "deskpilot/experiments.hpp"
#include "deskpilot/image_io.hpp"
#include "deskpilot/model_io.hpp"
#include "deskpilot/net.hpp"
#include "deskpilot/presets.hpp"
#include "deskpilot/sim/run.hpp"
#include "deskpilot/sim/scenario.hpp"
#include "deskpilot/stream.hpp"
#include "deskpilot/variation.hpp"

namespace dp = deskpilot;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct GlobalOpts {
    std::string data_root = "data";
    std::uint64_t seed = 1;
};

void print_histogram(const std::vector<long long>& before, const std::vector<long long>& after) {
    std::cout << std::left << std::setw(8) << "bin" << std::setw(20) << "steering range"
              << std::setw(10) << "before" << "after\n";
    const int bins = static_cast<int>(before.size());
    for (int b = 0; b < bins; ++b) {
        std::ostringstream range;
        range << std::fixed << std::setprecision(2) << "[" << (-1.0 + 2.0 * b / bins) << ", "
              << (-1.0 + 2.0 * (b + 1) / bins) << (b + 1 == bins ? "]" : ")");
        std::cout << std::left << std::setw(8) << b << std::setw(20) << range.str()
                  << std::setw(10) << before[b] << after[b] << "\n";
    }
}

void print_segregation(const dp::Dataset& ds, double ratio) {
    const long long n = static_cast<long long>(ds.samples.size());
    const long long train = static_cast<long long>(std::floor(n * ratio));
    std::cout << std::left << std::setw(14) << "behavior" << std::right << std::setw(8) << "total"
              << std::setw(8) << "train" << std::setw(12) << "validation\n";
    std::cout << std::left << std::setw(14) << dp::to_string(ds.behavior_tag) << std::right
              << std::setw(8) << n << std::setw(8) << train << std::setw(12) << (n - train)
              << "\n";
}

dp::TrackScenario scenario_for(const std::string& id) { return dp::make_scenario(id); }

// Training wrapper shared by cmd_train and the experiment suite's ablation
// path: split -> stream -> optimize -> save model plus history sidecars.
struct TrainArtifacts {
    dp::NetSpec spec;
    dp::TrainResult result;
    long long param_count = 0;
};

TrainArtifacts run_training(const dp::Dataset& ds, const dp::BehaviorPreset& preset,
                            std::uint64_t seed, const std::string& label) {
    auto [train_ds, val_ds] = dp::split(ds, preset.split_ratio, seed);
    dp::FrameCache cache(ds.root);

    dp::TrainStreamConfig scfg;
    scfg.batch_size = preset.batch_size;
    scfg.augmentation_loops = preset.augmentation_loops;
    scfg.probs = preset.probs;
    scfg.balance.deletion_rate = preset.zero_steer_deletion_rate;
    scfg.seed = seed;
    dp::BatchStream stream(std::move(train_ds), scfg, cache.loader());
    dp::ValidationStream val(std::move(val_ds), preset.batch_size, cache.loader());

    TrainArtifacts art;
    art.spec = dp::NetSpec::default_spec();
    art.param_count = art.spec.param_count();
    std::cout << label << ": " << ds.samples.size() << " samples, "
              << stream.steps_per_epoch() << " steps/epoch, " << preset.epochs << " epochs, "
              << art.param_count << " parameters\n";

    dp::TrainConfig tcfg;
    tcfg.learning_rate = preset.learning_rate;
    tcfg.epochs = preset.epochs;
    tcfg.seed = seed;
    art.result = dp::train(art.spec, stream, val, tcfg,
                           [](const std::string& line) { std::cout << "  " << line << "\n"; });
    std::cout << label << ": done in " << std::fixed << std::setprecision(1)
              << art.result.total_seconds << "s\n";
    return art;
}

void write_history_csv(const fs::path& path, const std::vector<dp::EpochStats>& history) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write history: " + path.string());
    out << "epoch,train_mse,val_mse,seconds\n" << std::setprecision(10);
    int epoch = 1;
    for (const auto& e : history)
        out << epoch++ << ',' << e.train_loss << ',' << e.val_loss << ',' << e.seconds << '\n';
}

void write_training_sidecar(const fs::path& model_path, const std::string& behavior,
                            const TrainArtifacts& art) {
    dp::TrainingInfo info;
    info.behavior = behavior;
    info.param_count = art.param_count;
    info.total_seconds = art.result.total_seconds;
    info.epochs = art.result.history;
    nlohmann::json j;
    j["behavior"] = info.behavior;
    j["param_count"] = info.param_count;
    j["total_seconds"] = info.total_seconds;
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : info.epochs)
        j["epochs"].push_back(
            {{"train_mse", e.train_loss}, {"val_mse", e.val_loss}, {"seconds", e.seconds}});
    std::ofstream out(model_path.string() + ".train.json");
    if (out) out << j.dump(2) << '\n';
}

std::optional<dp::TrainingInfo> read_training_sidecar(const fs::path& model_path) {
    std::ifstream in(model_path.string() + ".train.json");
    if (!in) return std::nullopt;
    nlohmann::json j;
    in >> j;
    dp::TrainingInfo info;
    info.behavior = j.value("behavior", "");
    info.param_count = j.value("param_count", 0LL);
    info.total_seconds = j.value("total_seconds", 0.0);
    if (j.contains("epochs"))
        for (const auto& je : j["epochs"])
            info.epochs.push_back({je.value("train_mse", 0.0), je.value("val_mse", 0.0),
                                   je.value("seconds", 0.0)});
    return info;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deskpilot — desk-scale behavioral-cloning driving workbench"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read option defaults from a config file (flags win)");

    GlobalOpts g;
    app.add_option("--data-root", g.data_root, "root directory for datasets and models")
        ->envname("DESKPILOT_DATA_ROOT")
        ->capture_default_str();
    app.add_option("--seed", g.seed, "master seed for every stochastic stage")
        ->capture_default_str();

    std::function<int()> action;

    // ---- collect ---------------------------------------------------------
    auto* c_collect = app.add_subcommand("collect", "drive the scripted demonstrator and record");
    struct {
        std::string scenario = "simplistic";
        int laps = 2;
        bool bidirectional = false;
        double sample_rate = 1.5;
        double control_rate = 30.0;
        std::string out;
    } co;
    c_collect->add_option("--scenario", co.scenario, "simplistic | rigorous | collision")
        ->required();
    c_collect->add_option("--laps", co.laps, "number of demonstration laps")
        ->capture_default_str();
    c_collect->add_flag("--bidirectional", co.bidirectional,
                        "alternate lap direction (half one way, half the other)");
    c_collect->add_option("--rate", co.sample_rate, "sampling rate in Hz")->capture_default_str();
    c_collect->add_option("--control-rate", co.control_rate, "demonstrator control rate in Hz")
        ->capture_default_str();
    c_collect->add_option("--out", co.out, "output dataset directory (default <root>/<scenario>)");
    c_collect->callback([&] {
        action = [&]() {
            const auto scn = scenario_for(co.scenario);
            dp::CollectOptions opts;
            opts.laps = co.laps;
            opts.bidirectional = co.bidirectional;
            opts.sample_rate_hz = co.sample_rate;
            opts.control_rate_hz = co.control_rate;
            opts.rig.count = scn.tag == dp::BehaviorTag::collision ? 1 : 3;
            const fs::path out =
                co.out.empty() ? fs::path(g.data_root) / co.scenario : fs::path(co.out);
            const auto ds = dp::collect(scn, opts, out);
            std::cout << "collected " << ds.samples.size() << " samples into " << out.string()
                      << "\n";
            print_segregation(ds, dp::preset_for_behavior(scn.tag).split_ratio);
            return kExitOk;
        };
    });

    // ---- balance ---------------------------------------------------------
    auto* c_balance = app.add_subcommand("balance", "report zero-steering thinning histograms");
    struct {
        std::string manifest;
        std::string behavior = "simplistic";
        double deletion_rate = -1.0;  // <0: use preset
    } ba;
    c_balance->add_option("--manifest", ba.manifest, "manifest.csv path")->required();
    c_balance->add_option("--behavior", ba.behavior, "preset for the deletion rate")
        ->capture_default_str();
    c_balance->add_option("--deletion-rate", ba.deletion_rate,
                          "override the preset zero-steering deletion rate");
    c_balance->callback([&] {
        action = [&]() {
            const auto ds = dp::load_manifest(ba.manifest);
            const auto preset = dp::preset_for_behavior(dp::behavior_from_string(ba.behavior));
            dp::BalanceConfig cfg;
            cfg.deletion_rate =
                ba.deletion_rate >= 0.0 ? ba.deletion_rate : preset.zero_steer_deletion_rate;
            cfg.validate();
            long long zero = 0;
            for (const auto& s : ds.samples)
                if (std::abs(s.steering) <= cfg.zero_epsilon) ++zero;
            dp::Rng rng(g.seed);
            const auto balanced = dp::balance_zero_steer(ds, cfg, rng);
            const auto before = dp::steering_histogram(ds);
            const auto after = dp::steering_histogram(balanced);
            std::cout << "zero-steering rows d=" << zero << ", deletion rate lambda="
                      << cfg.deletion_rate << ", removed D=" << std::llround(zero * cfg.deletion_rate)
                      << "\n\n";
            print_histogram(before, after);
            std::cout << "\nrows before=" << ds.samples.size()
                      << " after=" << balanced.samples.size() << "\n";
            return kExitOk;
        };
    });

    // ---- train -----------------------------------------------------------
    auto* c_train = app.add_subcommand("train", "fit the steering network on a dataset");
    struct {
        std::string manifest;
        std::string behavior = "simplistic";
        std::string out;
        int epochs = -1;
        int batch_size = -1;
        int loops = -1;
        double lr = -1.0;
        double deletion_rate = -1.0;
        double split_ratio = -1.0;
        bool no_augment = false;
    } tr;
    c_train->add_option("--manifest", tr.manifest, "manifest.csv path")->required();
    c_train->add_option("--behavior", tr.behavior, "training preset")->capture_default_str();
    c_train->add_option("--out", tr.out, "model output path (default <root>/models/<behavior>.dpnt)");
    c_train->add_option("--epochs", tr.epochs, "override preset epochs");
    c_train->add_option("--batch-size", tr.batch_size, "override preset batch size");
    c_train->add_option("--loops", tr.loops, "override the augmentation loop factor");
    c_train->add_option("--lr", tr.lr, "override the learning rate");
    c_train->add_option("--deletion-rate", tr.deletion_rate,
                        "override the zero-steering deletion rate");
    c_train->add_option("--split-ratio", tr.split_ratio, "override the train fraction");
    c_train->add_flag("--no-augment", tr.no_augment, "disable every augmentation (ablation)");
    c_train->callback([&] {
        action = [&]() {
            const auto ds = dp::load_manifest(tr.manifest);
            auto preset = dp::preset_for_behavior(dp::behavior_from_string(tr.behavior));
            if (tr.epochs > 0) preset.epochs = tr.epochs;
            if (tr.batch_size > 0) preset.batch_size = tr.batch_size;
            if (tr.loops > 0) preset.augmentation_loops = tr.loops;
            if (tr.lr > 0.0) preset.learning_rate = tr.lr;
            if (tr.deletion_rate >= 0.0) preset.zero_steer_deletion_rate = tr.deletion_rate;
            if (tr.split_ratio > 0.0) preset.split_ratio = tr.split_ratio;
            if (tr.no_augment) preset.probs = dp::AugmentationProbabilities::none();

            const auto art = run_training(ds, preset, g.seed, "train[" + tr.behavior + "]");
            const fs::path out = tr.out.empty()
                                     ? fs::path(g.data_root) / "models" / (tr.behavior + ".dpnt")
                                     : fs::path(tr.out);
            dp::save_model(out, art.spec, art.result.params);
            write_history_csv(out.string() + ".history.csv", art.result.history);
            write_training_sidecar(out, tr.behavior, art);
            const auto& last = art.result.history.back();
            std::cout << "model " << out.string() << "\n"
                      << "final train_mse=" << std::setprecision(6) << last.train_loss
                      << " val_mse=" << last.val_loss << " time=" << std::setprecision(1)
                      << art.result.total_seconds << "s\n";
            return kExitOk;
        };
    });

    // ---- evaluate ----------------------------------------------------------
    auto* c_eval = app.add_subcommand("evaluate", "run one closed-loop lap and report autonomy");
    struct {
        std::string model;
        std::string scenario = "simplistic";
        bool expert = false;
        double speed_limit = 25.0;
        double aggressiveness = 1.0;
        double rate = 30.0;
        double max_seconds = 900.0;
        std::string lap_log;
        double light_delta = 0.0;
        double direction_delta = 0.0;
        double yaw_delta = 0.0;
        bool invert = false;
        int obstacles = -1;
    } ev;
    c_eval->add_option("--model", ev.model, "trained model path (omit with --expert)");
    c_eval->add_option("--scenario", ev.scenario, "simplistic | rigorous | collision")
        ->required();
    c_eval->add_flag("--expert", ev.expert, "drive with the scripted demonstrator instead");
    c_eval->add_option("--speed-limit", ev.speed_limit, "deployment target speed in km/h")
        ->capture_default_str();
    c_eval->add_option("--aggressiveness", ev.aggressiveness, "longitudinal law tau")
        ->capture_default_str();
    c_eval->add_option("--rate", ev.rate, "control rate in Hz")->capture_default_str();
    c_eval->add_option("--max-seconds", ev.max_seconds, "simulation time cap")
        ->capture_default_str();
    c_eval->add_option("--lap-log", ev.lap_log, "write the per-step lap log CSV here");
    c_eval->add_option("--light-delta", ev.light_delta, "light intensity variation");
    c_eval->add_option("--direction-delta", ev.direction_delta, "light direction variation, deg");
    c_eval->add_option("--yaw-delta", ev.yaw_delta, "spawn orientation variation, deg");
    c_eval->add_flag("--invert", ev.invert, "invert the travel direction");
    c_eval->add_option("--obstacles", ev.obstacles, "re-randomize this many cones (collision)");
    c_eval->callback([&] {
        action = [&]() {
            if (!ev.expert && ev.model.empty())
                throw std::invalid_argument("evaluate needs --model or --expert");
            dp::ScenarioVariation var;
            var.light_intensity_delta = ev.light_delta;
            var.light_direction_delta_deg = ev.direction_delta;
            var.spawn_yaw_delta_deg = ev.yaw_delta;
            var.heading_inverted = ev.invert;
            if (ev.obstacles >= 0) {
                var.obstacle_count = ev.obstacles;
                var.obstacle_seed = g.seed;
            }
            const auto scn = dp::apply_variation(scenario_for(ev.scenario), var);

            dp::DriverSpec driver;
            if (ev.expert) {
                driver = dp::expert_driver(scn);
            } else {
                const auto loaded = dp::load_model(ev.model);
                driver = dp::model_driver(loaded.spec, loaded.params);
            }
            dp::ControlConfig control;
            control.speed_limit_kmh = ev.speed_limit;
            control.aggressiveness = ev.aggressiveness;
            dp::DeployOptions opts;
            opts.control_rate_hz = ev.rate;
            opts.max_sim_seconds = ev.max_seconds;
            const auto log = dp::deploy(scn, driver, control, opts);
            if (!ev.lap_log.empty()) dp::write_lap_log(ev.lap_log, log);
            const double eta = log.completed || log.interferences > 0
                                   ? dp::autonomy(log.interferences, std::max(log.lap_time, 1e-9))
                                   : 0.0;
            std::cout << std::fixed << std::setprecision(1) << "eta=" << eta << "%"
                      << " interferences=" << log.interferences << " lap_time=" << log.lap_time
                      << "s completed=" << (log.completed ? "yes" : "no") << "\n";
            return kExitOk;
        };
    });

    // ---- experiment --------------------------------------------------------
    auto* c_exp = app.add_subcommand("experiment", "run a robustness experiment suite");
    struct {
        std::string name = "all";
        std::string model;
        std::string scenario = "simplistic";
        std::string out;
        std::string table;
        double speed_limit = 25.0;
        int max_steps = 20;
        bool no_early_abort = false;
        bool no_latency = false;
    } ex;
    c_exp->add_option("name", ex.name, "experiment name or 'all'")->capture_default_str();
    c_exp->add_option("--model", ex.model, "trained model path")->required();
    c_exp->add_option("--scenario", ex.scenario, "simplistic | rigorous | collision")
        ->required();
    c_exp->add_option("--out", ex.out, "report JSON path (default <root>/reports/<scenario>.json)");
    c_exp->add_option("--table", ex.table, "also write the plain-text table here");
    c_exp->add_option("--speed-limit", ex.speed_limit, "deployment target speed in km/h")
        ->capture_default_str();
    c_exp->add_option("--max-steps", ex.max_steps, "sweep cap per direction")
        ->capture_default_str();
    c_exp->add_flag("--no-early-abort", ex.no_early_abort,
                    "run sweep laps to completion after the first interference");
    c_exp->add_flag("--no-latency", ex.no_latency, "skip the inference latency block");
    c_exp->callback([&] {
        action = [&]() {
            const auto scn = scenario_for(ex.scenario);
            const auto loaded = dp::load_model(ex.model);
            dp::DriverFactory factory = [&loaded](const dp::TrackScenario&) {
                return dp::model_driver(loaded.spec, loaded.params);
            };
            dp::ControlConfig control;
            control.speed_limit_kmh = ex.speed_limit;
            dp::ExperimentOptions opts;
            opts.max_sweep_steps = ex.max_steps;
            opts.early_abort_sweeps = !ex.no_early_abort;
            opts.seed = g.seed;

            std::vector<dp::ExperimentId> ids;
            if (ex.name == "all")
                ids = dp::default_experiments(scn.tag);
            else
                ids.push_back(dp::experiment_from_string(ex.name));

            dp::SuiteReport report;
            report.scenario = ex.scenario;
            for (const auto id : ids) {
                std::cout << "running " << dp::to_string(id) << "...\n";
                report.experiments.push_back(
                    dp::run_experiment(id, scn, factory, control, opts));
            }
            report.training = read_training_sidecar(ex.model);
            if (!ex.no_latency) {
                const auto frame = dp::render_camera(scn, scn.spawn, dp::FrameSource::center);
                report.latency = dp::measure_latency(loaded.spec, loaded.params, frame);
            }
            const fs::path out =
                ex.out.empty() ? fs::path(g.data_root) / "reports" / (ex.scenario + ".json")
                               : fs::path(ex.out);
            dp::save_report(out, report);
            const std::string text = dp::format_report_text(report);
            if (!ex.table.empty()) {
                if (fs::path(ex.table).has_parent_path())
                    fs::create_directories(fs::path(ex.table).parent_path());
                std::ofstream tout(ex.table);
                tout << text;
            }
            std::cout << text << "report " << out.string() << "\n";
            return kExitOk;
        };
    });

    // ---- activations -------------------------------------------------------
    auto* c_act = app.add_subcommand("activations", "dump per-layer feature map rasters");
    struct {
        std::string model;
        std::string frame;
        int layer = 0;
        std::string out = "activations";
    } ac;
    c_act->add_option("--model", ac.model, "trained model path")->required();
    c_act->add_option("--frame", ac.frame, "input frame (PPM)")->required();
    c_act->add_option("--layer", ac.layer, "1-based conv layer (0 = all)")->capture_default_str();
    c_act->add_option("--out", ac.out, "output directory")->capture_default_str();
    c_act->callback([&] {
        action = [&]() {
            const auto loaded = dp::load_model(ac.model);
            const auto frame = dp::read_ppm(ac.frame);
            const auto maps = dp::activation_maps(loaded.spec, loaded.params, frame);
            if (ac.layer < 0 || ac.layer > static_cast<int>(maps.layers.size()))
                throw std::invalid_argument("--layer out of range");
            fs::create_directories(ac.out);
            for (std::size_t li = 0; li < maps.layers.size(); ++li) {
                if (ac.layer != 0 && static_cast<std::size_t>(ac.layer - 1) != li) continue;
                const auto& layer = maps.layers[li];
                for (std::size_t mi = 0; mi < layer.maps.size(); ++mi) {
                    std::ostringstream name;
                    name << "layer" << (li + 1) << "_map" << std::setfill('0') << std::setw(2)
                         << mi << ".pgm";
                    dp::write_pgm(layer.maps[mi], layer.width, layer.height,
                                  (fs::path(ac.out) / name.str()).string());
                }
                std::cout << "layer " << (li + 1) << ": " << layer.maps.size() << " maps of "
                          << layer.width << "x" << layer.height << "\n";
            }
            return kExitOk;
        };
    });

    // ---- predict-analyze ----------------------------------------------------
    auto* c_pred = app.add_subcommand("predict-analyze",
                                      "compare recorded steering with model predictions");
    struct {
        std::string model;
        std::string manifest;
        std::string out = "predictions.csv";
        int limit = 0;
    } pr;
    c_pred->add_option("--model", pr.model, "trained model path")->required();
    c_pred->add_option("--manifest", pr.manifest, "manifest.csv path")->required();
    c_pred->add_option("--out", pr.out, "output CSV path")->capture_default_str();
    c_pred->add_option("--limit", pr.limit, "analyze only the first N samples (0 = all)")
        ->capture_default_str();
    c_pred->callback([&] {
        action = [&]() {
            const auto loaded = dp::load_model(pr.model);
            auto ds = dp::load_manifest(pr.manifest);
            if (pr.limit > 0 && static_cast<std::size_t>(pr.limit) < ds.samples.size())
                ds.samples.resize(static_cast<std::size_t>(pr.limit));
            const auto analysis = dp::prediction_analysis(loaded.spec, loaded.params, ds);
            dp::write_prediction_csv(pr.out, analysis);
            std::cout << std::fixed << std::setprecision(6) << "samples=" << analysis.rows.size()
                      << " mae=" << analysis.mae << " pearson=" << std::setprecision(4)
                      << analysis.pearson << "\n"
                      << "csv " << pr.out << "\n";
            return kExitOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const dp::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
