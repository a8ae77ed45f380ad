#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "deskpilot/control.hpp"
#include "deskpilot/dataset.hpp"
#include "deskpilot/net.hpp"
#include "deskpilot/sim/run.hpp"
#include "deskpilot/sim/scenario.hpp"
#include "deskpilot/variation.hpp"

namespace deskpilot {

// Autonomy percentage: each interference docks a fixed six-second penalty
// against the lap time; clamped to [0, 100].
inline double autonomy(int interferences, double lap_time_s) {
    if (interferences < 0) throw std::invalid_argument("interference count must be >= 0");
    if (!(lap_time_s > 0.0)) throw std::invalid_argument("lap time must be positive");
    const double eta = (1.0 - 6.0 * interferences / lap_time_s) * 100.0;
    return std::clamp(eta, 0.0, 100.0);
}

enum class ExperimentId {
    no_variation,
    obstacle_variation,
    light_intensity,
    light_direction,
    spawn_position,
    spawn_orientation,
    heading_inversion,
    speed_limit,
};

inline const char* to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::no_variation: return "no_variation";
        case ExperimentId::obstacle_variation: return "obstacle_variation";
        case ExperimentId::light_intensity: return "light_intensity";
        case ExperimentId::light_direction: return "light_direction";
        case ExperimentId::spawn_position: return "spawn_position";
        case ExperimentId::spawn_orientation: return "spawn_orientation";
        case ExperimentId::heading_inversion: return "heading_inversion";
        case ExperimentId::speed_limit: return "speed_limit";
    }
    throw std::logic_error("unknown experiment id");
}

inline ExperimentId experiment_from_string(const std::string& name) {
    static const std::map<std::string, ExperimentId> table = {
        {"no_variation", ExperimentId::no_variation},
        {"obstacle_variation", ExperimentId::obstacle_variation},
        {"light_intensity", ExperimentId::light_intensity},
        {"light_direction", ExperimentId::light_direction},
        {"spawn_position", ExperimentId::spawn_position},
        {"spawn_orientation", ExperimentId::spawn_orientation},
        {"heading_inversion", ExperimentId::heading_inversion},
        {"speed_limit", ExperimentId::speed_limit},
    };
    const auto it = table.find(name);
    if (it == table.end()) throw std::invalid_argument("unknown experiment: " + name);
    return it->second;
}

inline bool is_sweep(ExperimentId id) {
    switch (id) {
        case ExperimentId::light_intensity:
        case ExperimentId::light_direction:
        case ExperimentId::spawn_orientation:
        case ExperimentId::speed_limit: return true;
        default: return false;
    }
}

inline double sweep_step(ExperimentId id) {
    switch (id) {
        case ExperimentId::light_intensity: return 0.1;
        case ExperimentId::light_direction: return 1.0;
        case ExperimentId::spawn_orientation: return 5.0;
        case ExperimentId::speed_limit: return 5.0;
        default: return 0.0;
    }
}

// The experiments applicable to a scenario; cone re-randomization only makes
// sense where cones exist.
inline std::vector<ExperimentId> default_experiments(BehaviorTag tag) {
    std::vector<ExperimentId> ids = {
        ExperimentId::no_variation,     ExperimentId::light_intensity,
        ExperimentId::light_direction,  ExperimentId::spawn_position,
        ExperimentId::spawn_orientation, ExperimentId::heading_inversion,
        ExperimentId::speed_limit,
    };
    if (tag == BehaviorTag::collision)
        ids.insert(ids.begin() + 1, ExperimentId::obstacle_variation);
    return ids;
}

struct VariationRun {
    double key = 0.0;  // sweep delta, absolute speed limit, or cone count
    double eta = 0.0;
    int interferences = 0;
    double lap_time_s = 0.0;
    bool completed = false;
};

struct ExperimentReport {
    ExperimentId id = ExperimentId::no_variation;
    bool sweep = false;
    double step = 0.0;
    std::vector<VariationRun> runs;
    bool has_bounds = false;  // sweeps only: baseline run stayed clean
    double lower = 0.0;
    double upper = 0.0;
};

struct ExperimentOptions {
    int max_sweep_steps = 20;       // cap per direction
    bool early_abort_sweeps = true; // stop a sweep lap on its first interference
    std::uint64_t seed = 1;         // cone re-randomization
    DeployOptions deploy;
};

namespace detail {

struct RunOutcome {
    VariationRun run;
    bool clean = false;  // finished the lap with zero interferences
};

inline RunOutcome run_variation(const TrackScenario& scn, const DriverFactory& factory,
                                const ControlConfig& control, const ScenarioVariation& var,
                                double key, const DeployOptions& deploy_opts, bool early_abort) {
    const TrackScenario eff = apply_variation(scn, var);
    ControlConfig ctrl = control;
    if (var.speed_limit_kmh) ctrl.speed_limit_kmh = *var.speed_limit_kmh;
    DeployOptions opts = deploy_opts;
    opts.stop_on_first_interference = early_abort;
    const DriverSpec driver = factory(eff);
    const LapLog log = deploy(eff, driver, ctrl, opts);
    RunOutcome out;
    out.run.key = key;
    out.run.interferences = log.interferences;
    out.run.lap_time_s = log.lap_time;
    out.run.completed = log.completed;
    out.run.eta = (!log.completed && log.interferences == 0)
                      ? 0.0
                      : autonomy(log.interferences, std::max(log.lap_time, 1e-9));
    out.clean = log.completed && log.interferences == 0;
    return out;
}

inline ScenarioVariation variation_for(ExperimentId id, double key, const TrackScenario& scn,
                                       std::uint64_t seed) {
    ScenarioVariation var;
    switch (id) {
        case ExperimentId::no_variation: break;
        case ExperimentId::light_intensity: var.light_intensity_delta = key; break;
        case ExperimentId::light_direction: var.light_direction_delta_deg = key; break;
        case ExperimentId::spawn_orientation: var.spawn_yaw_delta_deg = key; break;
        case ExperimentId::speed_limit: var.speed_limit_kmh = key; break;
        case ExperimentId::heading_inversion: var.heading_inverted = true; break;
        case ExperimentId::spawn_position: {
            // restart from the far side of the loop, corridor center, facing travel
            const auto& idx = scn.index();
            const auto p = idx.at(idx.length() / 2.0);
            const Vec2 right{-p.tangent.y, p.tangent.x};
            const double off = scn.corridor_offset(p.half_width);
            var.spawn_pose = ScenePose{p.pos.x + off * right.x, p.pos.y + off * right.y, p.yaw};
            break;
        }
        case ExperimentId::obstacle_variation: {
            var.obstacle_count = static_cast<int>(key);
            var.obstacle_seed = Rng::derive(seed, static_cast<std::uint64_t>(key)).next_u64();
            break;
        }
    }
    return var;
}

}  // namespace detail

// Runs one robustness experiment. Sweeps step outward from the unvaried
// baseline in their prescribed increments until a lap stops being clean (or
// the cap is hit) and report the surviving [lower, upper] interval; point
// experiments run their fixed variations and report per-run autonomy.
inline ExperimentReport run_experiment(ExperimentId id, const TrackScenario& scn,
                                       const DriverFactory& factory, const ControlConfig& control,
                                       const ExperimentOptions& opts = {}) {
    if (id == ExperimentId::obstacle_variation && scn.tag != BehaviorTag::collision)
        throw std::invalid_argument("obstacle variation requires an obstacle scenario");

    ExperimentReport rep;
    rep.id = id;
    rep.sweep = is_sweep(id);
    rep.step = sweep_step(id);

    const auto run_key = [&](double key, bool early_abort) {
        const auto var = detail::variation_for(id, key, scn, opts.seed);
        return detail::run_variation(scn, factory, control, var, key, opts.deploy, early_abort);
    };

    if (rep.sweep) {
        const bool one_sided = id == ExperimentId::speed_limit;
        const double base = one_sided ? scn.speed_limit_kmh : 0.0;
        const auto baseline = run_key(base, false);
        rep.runs.push_back(baseline.run);
        if (baseline.clean) {
            rep.has_bounds = true;
            rep.lower = rep.upper = base;
            const auto sweep_dir = [&](double sign, double& bound) {
                for (int k = 1; k <= opts.max_sweep_steps; ++k) {
                    const double key = base + sign * k * rep.step;
                    const auto out = run_key(key, opts.early_abort_sweeps);
                    rep.runs.push_back(out.run);
                    if (!out.clean) break;
                    bound = key;
                }
            };
            sweep_dir(+1.0, rep.upper);
            if (!one_sided) sweep_dir(-1.0, rep.lower);
        }
        std::sort(rep.runs.begin(), rep.runs.end(),
                  [](const VariationRun& a, const VariationRun& b) { return a.key < b.key; });
    } else if (id == ExperimentId::obstacle_variation) {
        for (const double count : {20.0, 10.0, 0.0}) rep.runs.push_back(run_key(count, false).run);
    } else {
        rep.runs.push_back(run_key(0.0, false).run);
    }
    return rep;
}

struct TrainingInfo {
    std::string behavior;
    long long param_count = 0;
    double total_seconds = 0.0;
    std::vector<EpochStats> epochs;
};

struct LatencyInfo {
    double mode_ms = 0.0;
    double mean_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    int samples = 0;
};

struct SuiteReport {
    std::string scenario;
    std::vector<ExperimentReport> experiments;
    std::optional<TrainingInfo> training;
    std::optional<LatencyInfo> latency;
};

// Per-frame inference wall time; the headline number is the mode over a
// 0.05 ms histogram, which shrugs off scheduler outliers better than a mean.
inline LatencyInfo measure_latency(const NetSpec& spec, const NetParams& params,
                                   const ImageU8& frame, int samples = 300) {
    if (samples < 1) throw std::invalid_argument("latency needs at least one sample");
    using clock = std::chrono::steady_clock;
    volatile float sink = 0.0f;
    for (int i = 0; i < 10; ++i) sink = sink + predict(spec, params, frame);
    std::vector<double> ms(static_cast<std::size_t>(samples));
    for (auto& m : ms) {
        const auto t0 = clock::now();
        sink = sink + predict(spec, params, frame);
        m = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    }
    LatencyInfo info;
    info.samples = samples;
    info.min_ms = *std::min_element(ms.begin(), ms.end());
    info.max_ms = *std::max_element(ms.begin(), ms.end());
    double sum = 0.0;
    std::map<long long, int> bins;
    for (const double m : ms) {
        sum += m;
        bins[static_cast<long long>(std::floor(m / 0.05))] += 1;
    }
    info.mean_ms = sum / samples;
    long long best_bin = bins.begin()->first;
    int best_count = 0;
    for (const auto& [bin, count] : bins) {
        if (count > best_count) {
            best_count = count;
            best_bin = bin;
        }
    }
    info.mode_ms = (best_bin + 0.5) * 0.05;
    return info;
}

struct PredictionRow {
    double timestamp = 0.0;
    double truth = 0.0;
    double predicted = 0.0;
};

struct PredictionAnalysis {
    std::vector<PredictionRow> rows;
    double mae = 0.0;
    double pearson = 0.0;
};

// Ordered per-sample comparison of recorded steering against the model's
// prediction on the same center frames.
inline PredictionAnalysis prediction_analysis(const NetSpec& spec, const NetParams& params,
                                              const Dataset& ds) {
    if (ds.samples.empty()) throw std::invalid_argument("prediction analysis needs samples");
    PredictionAnalysis out;
    out.rows.reserve(ds.samples.size());
    double abs_sum = 0.0;
    for (const auto& s : ds.samples) {
        if (s.center.empty()) throw std::runtime_error("sample without a center frame");
        const ImageU8 frame = read_ppm(ds.frame_path(s.center));
        const double pred = predict(spec, params, frame);
        out.rows.push_back({s.timestamp, s.steering, pred});
        abs_sum += std::abs(pred - s.steering);
    }
    const double n = static_cast<double>(out.rows.size());
    out.mae = abs_sum / n;
    double mt = 0.0, mp = 0.0;
    for (const auto& r : out.rows) {
        mt += r.truth;
        mp += r.predicted;
    }
    mt /= n;
    mp /= n;
    double cov = 0.0, vt = 0.0, vp = 0.0;
    for (const auto& r : out.rows) {
        cov += (r.truth - mt) * (r.predicted - mp);
        vt += (r.truth - mt) * (r.truth - mt);
        vp += (r.predicted - mp) * (r.predicted - mp);
    }
    out.pearson = (vt > 0.0 && vp > 0.0) ? cov / std::sqrt(vt * vp) : 0.0;
    return out;
}

inline void write_prediction_csv(const std::filesystem::path& path,
                                 const PredictionAnalysis& analysis) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write prediction csv: " + path.string());
    out << "timestamp,steering,prediction\n" << std::setprecision(10);
    for (const auto& r : analysis.rows)
        out << r.timestamp << ',' << r.truth << ',' << r.predicted << '\n';
}

// --- report serialization ----------------------------------------------

inline nlohmann::json report_to_json(const SuiteReport& rep) {
    nlohmann::json j;
    j["scenario"] = rep.scenario;
    j["experiments"] = nlohmann::json::array();
    for (const auto& e : rep.experiments) {
        nlohmann::json je;
        je["id"] = to_string(e.id);
        je["kind"] = e.sweep ? "sweep" : "point";
        if (e.sweep) je["step"] = e.step;
        je["runs"] = nlohmann::json::array();
        for (const auto& r : e.runs) {
            je["runs"].push_back({{"key", r.key},
                                  {"eta", r.eta},
                                  {"interferences", r.interferences},
                                  {"lap_time", r.lap_time_s},
                                  {"completed", r.completed}});
        }
        if (e.has_bounds) je["bounds"] = {e.lower, e.upper};
        j["experiments"].push_back(std::move(je));
    }
    if (rep.training) {
        nlohmann::json jt;
        jt["behavior"] = rep.training->behavior;
        jt["param_count"] = rep.training->param_count;
        jt["total_seconds"] = rep.training->total_seconds;
        jt["epochs"] = nlohmann::json::array();
        for (const auto& e : rep.training->epochs)
            jt["epochs"].push_back(
                {{"train_mse", e.train_loss}, {"val_mse", e.val_loss}, {"seconds", e.seconds}});
        j["training"] = std::move(jt);
    }
    if (rep.latency) {
        j["latency"] = {{"mode_ms", rep.latency->mode_ms},
                        {"mean_ms", rep.latency->mean_ms},
                        {"min_ms", rep.latency->min_ms},
                        {"max_ms", rep.latency->max_ms},
                        {"samples", rep.latency->samples}};
    }
    return j;
}

inline SuiteReport report_from_json(const nlohmann::json& j) {
    SuiteReport rep;
    rep.scenario = j.at("scenario").get<std::string>();
    for (const auto& je : j.at("experiments")) {
        ExperimentReport e;
        e.id = experiment_from_string(je.at("id").get<std::string>());
        e.sweep = je.at("kind").get<std::string>() == "sweep";
        e.step = je.value("step", 0.0);
        for (const auto& jr : je.at("runs")) {
            VariationRun r;
            r.key = jr.at("key").get<double>();
            r.eta = jr.at("eta").get<double>();
            r.interferences = jr.at("interferences").get<int>();
            r.lap_time_s = jr.at("lap_time").get<double>();
            r.completed = jr.at("completed").get<bool>();
            e.runs.push_back(r);
        }
        if (je.contains("bounds")) {
            e.has_bounds = true;
            e.lower = je["bounds"].at(0).get<double>();
            e.upper = je["bounds"].at(1).get<double>();
        }
        rep.experiments.push_back(std::move(e));
    }
    if (j.contains("training")) {
        TrainingInfo t;
        const auto& jt = j["training"];
        t.behavior = jt.at("behavior").get<std::string>();
        t.param_count = jt.at("param_count").get<long long>();
        t.total_seconds = jt.at("total_seconds").get<double>();
        for (const auto& je : jt.at("epochs"))
            t.epochs.push_back({je.at("train_mse").get<double>(), je.at("val_mse").get<double>(),
                                je.at("seconds").get<double>()});
        rep.training = std::move(t);
    }
    if (j.contains("latency")) {
        LatencyInfo l;
        const auto& jl = j["latency"];
        l.mode_ms = jl.at("mode_ms").get<double>();
        l.mean_ms = jl.at("mean_ms").get<double>();
        l.min_ms = jl.at("min_ms").get<double>();
        l.max_ms = jl.at("max_ms").get<double>();
        l.samples = jl.at("samples").get<int>();
        rep.latency = l;
    }
    return rep;
}

inline void save_report(const std::filesystem::path& path, const SuiteReport& rep) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path.string());
    out << report_to_json(rep).dump(2) << '\n';
}

inline SuiteReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read report: " + path.string());
    nlohmann::json j;
    in >> j;
    return report_from_json(j);
}

// Human-oriented summary table of the same report.
inline std::string format_report_text(const SuiteReport& rep) {
    std::ostringstream out;
    out << "deployment report: " << rep.scenario << "\n";
    out << std::string(66, '-') << "\n";
    out << std::left << std::setw(22) << "experiment" << std::setw(7) << "kind" << std::setw(7)
        << "step" << std::setw(6) << "runs" << "bounds / outcome\n";
    out << std::fixed;
    for (const auto& e : rep.experiments) {
        out << std::setw(22) << to_string(e.id) << std::setw(7) << (e.sweep ? "sweep" : "point");
        if (e.sweep)
            out << std::setw(7) << std::setprecision(2) << e.step;
        else
            out << std::setw(7) << "-";
        out << std::setw(6) << e.runs.size();
        if (e.sweep) {
            if (e.has_bounds)
                out << "[" << std::setprecision(2) << e.lower << ", " << e.upper << "]";
            else
                out << "baseline failed";
        } else {
            out << std::setprecision(1);
            for (std::size_t i = 0; i < e.runs.size(); ++i) {
                if (i) out << "  ";
                out << "key=" << std::setprecision(0) << e.runs[i].key << " eta="
                    << std::setprecision(1) << e.runs[i].eta;
            }
        }
        out << "\n";
    }
    out << "\nper-run detail\n";
    for (const auto& e : rep.experiments) {
        for (const auto& r : e.runs) {
            out << "  " << std::setw(20) << std::left << to_string(e.id) << std::right
                << " key=" << std::setw(8) << std::setprecision(2) << r.key
                << " eta=" << std::setw(6) << std::setprecision(1) << r.eta
                << " interferences=" << std::setw(3) << r.interferences
                << " lap_time=" << std::setw(8) << std::setprecision(1) << r.lap_time_s << "s"
                << (r.completed ? "" : "  (incomplete)") << "\n";
        }
    }
    if (rep.training) {
        const auto& t = *rep.training;
        out << "\ntraining: behavior=" << t.behavior << " params=" << t.param_count
            << " time=" << std::setprecision(1) << t.total_seconds << "s\n";
        int i = 1;
        for (const auto& e : t.epochs) {
            out << "  epoch " << i++ << ": train_mse=" << std::setprecision(6) << e.train_loss
                << " val_mse=" << e.val_loss << " (" << std::setprecision(1) << e.seconds
                << "s)\n";
        }
    }
    if (rep.latency) {
        const auto& l = *rep.latency;
        out << "\nlatency: mode=" << std::setprecision(2) << l.mode_ms << "ms mean=" << l.mean_ms
            << "ms min=" << l.min_ms << "ms max=" << l.max_ms << "ms over " << l.samples
            << " samples\n";
    }
    return out.str();
}

}  // namespace deskpilot
