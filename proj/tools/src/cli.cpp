#include "cli.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <wqcascade/cascade.hpp>
#include <wqcascade/dataio.hpp>
#include <wqcascade/error.hpp>
#include <wqcascade/eval.hpp>
#include <wqcascade/forest.hpp>
#include <wqcascade/parallel.hpp>
#include <wqcascade/report.hpp>
#include <wqcascade/splits.hpp>
#include <wqcascade/stats.hpp>
#include <wqcascade/synth.hpp>

#include "config.hpp"

namespace wqcascade::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct ValueFlag {
    const char* name;
    const char* key;
    const char* help;
};

constexpr ValueFlag kValueFlags[] = {
    {"--data", "data.path", "Dataset CSV"},
    {"--thin", "data.thin", "Thin the dataset to this many records before splitting"},
    {"--synth-seed", "synth.seed", "Seed of the synthetic generator"},
    {"--split", "split.spec", "uniform:k=5,offset=4 | temporal:year=2019 | spatial:station=KW | none"},
    {"--group", "split.group", "Station group: low, high or all"},
    {"--stations", "split.stations", "Comma-separated station codes overriding the group"},
    {"--kind", "model.kind", "single or cascade"},
    {"--model", "model.path", "Trained model JSON"},
    {"--estimators", "model.estimators", "Trees per forest"},
    {"--max-depth", "model.max_depth", "Maximum tree depth"},
    {"--min-samples-split", "model.min_samples_split", "Smallest node that may be split"},
    {"--max-features", "model.max_features", "Candidate features per split (0 = ceil(sqrt F))"},
    {"--stages", "model.stages", "Cascade stage count"},
    {"--min-stage-size", "model.min_stage_size", "Smallest stage training set"},
    {"--policy", "policy.mode", "uniform, increasing or all"},
    {"--theta", "policy.theta", "Uniform strong threshold"},
    {"--thetas", "policy.thetas", "Per-stage strong thresholds"},
    {"--weak", "policy.weak", "off, default or per-stage weak thresholds (none allowed)"},
    {"--feature-masks", "policy.feature_masks", "off, default or per-stage lists joined with +"},
    {"--weak-pairing", "policy.weak_pairing", "previous or current"},
    {"--comparison", "policy.comparison", "at_least or greater"},
    {"--limit", "run.limit", "Classification limit (CFU/100 mL)"},
    {"--limits", "run.limits", "Sweep limits, comma-separated, or auto"},
    {"--n-runs", "run.n_runs", "Repeated runs per experiment"},
    {"--seed", "run.seed", "Master seed"},
    {"--out", "run.out", "Output directory"},
    {"--formats", "run.formats", "Report formats: csv,json,markdown"},
    {"--threads", "run.threads", "Worker threads (0 = all cores)"},
};

struct Command {
    const char* name;
    const char* help;
    /// Default split when none is configured.
    const char* split;
};

constexpr Command kCommands[] = {
    {"ingest", "Parse and validate a dataset; write station statistics", "none"},
    {"synth", "Generate a calibrated synthetic dataset", "none"},
    {"split", "Write the train and test sets of a split", "uniform:k=5,offset=4"},
    {"train-single", "Fit one forest and write it as JSON", "none"},
    {"train-cascade", "Fit a cascade and write it as JSON", "none"},
    {"classify", "Classify every record with a trained model", "none"},
    {"evaluate", "Run the repeated-run experiment or score a trained model", "uniform:k=5,offset=4"},
    {"sweep", "Single-model limit sweep with an SVG plot", "uniform:k=5,offset=4"},
};

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Output directory bookkeeping: every artifact is listed in manifest.json.
class Run {
public:
    Run(std::string command, RunConfig cfg, std::ostream& out, std::ostream& err)
        : command_(std::move(command)), cfg_(std::move(cfg)), out_(out), err_(err) {
        prov_ = {config_hash(cfg_), cfg_.seed};
        std::error_code ec;
        fs::create_directories(cfg_.out, ec);
        if (ec) throw IoError("cannot create output directory " + cfg_.out.string() + ": " + ec.message());
        err_ << "wqcascade " << command_ << ": config_hash=" << prov_.config_hash << " seed=" << cfg_.seed
             << " threads=" << resolve_threads(cfg_.threads) << '\n';
        write("config.ini", to_ini(cfg_));
    }

    const RunConfig& cfg() const { return cfg_; }
    const Provenance& prov() const { return prov_; }
    std::ostream& out() { return out_; }
    std::ostream& err() { return err_; }

    void write(const std::string& name, std::string_view text) {
        write_text(cfg_.out / name, text);
        files_.push_back(name);
    }

    void write_reports(const std::string& stem, const std::function<std::string(ReportFormat)>& emit) {
        for (auto f : cfg_.formats) write(stem + "." + std::string(extension(f)), emit(f));
    }

    void finish() {
        Json j;
        j["format"] = "wqcascade.manifest";
        j["version"] = 1;
        j["command"] = command_;
        j["config_hash"] = prov_.config_hash;
        j["seed"] = cfg_.seed;
        auto files = files_;
        std::sort(files.begin(), files.end());
        j["files"] = files;
        write_text(cfg_.out / "manifest.json", j.dump(2) + "\n");
        err_ << "wqcascade " << command_ << ": wrote " << files_.size() + 1 << " files to " << cfg_.out.string() << '\n';
    }

private:
    std::string command_;
    RunConfig cfg_;
    std::ostream& out_;
    std::ostream& err_;
    Provenance prov_;
    std::vector<std::string> files_;
};

/// Model JSON with a provenance object appended.
std::string with_provenance(const std::string& model_json, const Provenance& prov) {
    auto j = Json::parse(model_json);
    j["provenance"] = {{"config_hash", prov.config_hash}, {"seed", prov.seed}};
    return j.dump() + "\n";
}

Dataset load_raw(Run& run) {
    const auto& cfg = run.cfg();
    if (cfg.data) {
        auto parsed = read_dataset_file(*cfg.data);
        for (const auto& w : parsed.warnings) run.err() << cfg.data->string() << ": warning: " << w << '\n';
        return std::move(parsed.dataset);
    }
    if (cfg.use_synth) return generate_dataset(cfg.synth);
    throw ConfigError("no dataset: pass --data FILE or --synth");
}

/// Outlier removal, station group and thinning as configured.
Dataset load_prepared(Run& run) {
    const auto& cfg = run.cfg();
    Dataset d = load_raw(run);
    if (cfg.drop_outliers) d = remove_outliers(d);
    if (cfg.group.name != GroupName::All || !cfg.group.stations.empty()) d = select_group(d, cfg.group);
    if (cfg.thin) d = thin(d, *cfg.thin);
    if (d.empty()) throw ValidationError("dataset is empty after outlier removal and station selection");
    return d;
}

Split make_split(const RunConfig& cfg, const Dataset& d) {
    if (!cfg.split) return {d, d};
    return apply_split(d, *cfg.split);
}

ForestParams forest_params(const RunConfig& cfg) {
    ForestParams p = cfg.forest;
    p.seed = cfg.seed;
    return p;
}

std::string model_format(const std::string& text) {
    try {
        const auto j = Json::parse(text);
        if (j.is_object() && j.contains("format") && j["format"].is_string()) return j["format"].get<std::string>();
    } catch (const Json::exception&) {
    }
    throw ValidationError("model file is not a wqcascade model document");
}

CascadeModel load_cascade(const RunConfig& cfg, const std::string& text) {
    auto model = CascadeModel::from_json(text);
    if (cfg.policy_explicit) model = model.with_policy(cfg.policy);
    return model;
}

int cmd_ingest(Run& run) {
    const auto& cfg = run.cfg();
    const Dataset raw = load_raw(run);
    validate_dataset(raw);
    const Dataset d = cfg.drop_outliers ? remove_outliers(raw) : raw;
    const auto stats = station_stats(d);
    run.write_reports("station_stats", [&](ReportFormat f) { return emit_report(stats, f, run.prov()); });
    std::size_t above = 0;
    for (const auto& m : d.records) above += m.ecoli > cfg.limit;
    run.out() << "records " << raw.size() << ", outliers removed " << raw.size() - d.size() << ", stations "
              << stats.size() << ", above " << format_number(cfg.limit) << ": " << above << '\n';
    return kExitOk;
}

int cmd_synth(Run& run) {
    const Dataset d = generate_dataset(run.cfg().synth);
    run.write("synthetic.csv", serialize_dataset(d));
    run.out() << "generated " << d.size() << " records\n";
    return kExitOk;
}

int cmd_split(Run& run) {
    const auto split = make_split(run.cfg(), load_prepared(run));
    run.write("train.csv", serialize_dataset(split.train));
    run.write("test.csv", serialize_dataset(split.test));
    run.out() << "train " << split.train.size() << ", test " << split.test.size() << '\n';
    return kExitOk;
}

int cmd_train_single(Run& run) {
    const auto& cfg = run.cfg();
    const auto split = make_split(cfg, load_prepared(run));
    const auto data = label(split.train, cfg.limit, default_features());
    const Forest forest = fit_forest(data, forest_params(cfg), cfg.threads);
    run.write("forest.json", with_provenance(forest.to_json(), run.prov()));
    run.out() << "trained " << forest.trees().size() << " trees on " << data.rows() << " records ("
              << data.count(Label::Above) << " above " << format_number(cfg.limit) << ")\n";
    return kExitOk;
}

int cmd_train_cascade(Run& run) {
    const auto& cfg = run.cfg();
    const auto split = make_split(cfg, load_prepared(run));
    const auto model = fit_cascade(split.train, forest_params(cfg), cfg.policy, cfg.stages, default_features(),
                                   cfg.threads, cfg.min_stage_size);
    if (model.stages().size() < cfg.stages) {
        run.err() << "warning: stage construction stopped after " << model.stages().size()
                  << " stages (next subset below " << cfg.min_stage_size << " records)\n";
    }
    run.write("cascade.json", with_provenance(model.to_json(), run.prov()));
    run.out() << "trained " << model.stages().size() << " stages; training sizes";
    for (const auto& s : model.stages()) run.out() << ' ' << s.train_size;
    run.out() << '\n';
    return kExitOk;
}

int cmd_classify(Run& run) {
    const auto& cfg = run.cfg();
    if (!cfg.model) throw ConfigError("classify needs --model");
    const std::string text = read_text(*cfg.model);
    const Dataset d = load_prepared(run);

    if (model_format(text) == "wqcascade.forest") {
        const Forest forest = Forest::from_json(text);
        const std::vector<std::string> names(forest.feature_names().begin(), forest.feature_names().end());
        std::string csv = "id,station,ecoli,prediction,p_below\n";
        for (const auto& m : d.records) {
            const double p = forest.predict_proba(extract_features(m, names));
            csv += std::to_string(m.id) + ',' + m.station + ',' + std::to_string(m.ecoli) + ',' +
                   (p > 0.5 ? "BELOW" : "ABOVE") + ',' + format_number(p) + '\n';
        }
        run.write("predictions.csv", csv);
        run.out() << "classified " << d.size() << " records\n";
        return kExitOk;
    }

    const CascadeModel model = load_cascade(cfg, text);
    const auto preds = classify_dataset(model, d, cfg.threads);
    run.write("predictions.csv", emit_predictions(d, preds, model.stages().size(), run.prov()));
    const auto report = score_cascade(preds, d, model.stages().size(), cfg.limit);
    run.write_reports("classify_report", [&](ReportFormat f) { return emit_report(report, f, run.prov()); });
    run.out() << "excellent " << report.true_positive + report.false_negative << ", suspect " << report.suspects
              << " of " << d.size() << '\n';
    return kExitOk;
}

int cmd_evaluate(Run& run) {
    const auto& cfg = run.cfg();
    const auto split = make_split(cfg, load_prepared(run));

    if (cfg.model) {
        const CascadeModel model = load_cascade(cfg, read_text(*cfg.model));
        const auto report = evaluate_cascade(model, split.test, cfg.limit, cfg.threads);
        run.write_reports("cascade_eval", [&](ReportFormat f) { return emit_report(report, f, run.prov()); });
        run.out() << "TP " << report.true_positive << ", FN " << report.false_negative << ", suspects "
                  << report.suspects << " of " << report.n_test << '\n';
        return kExitOk;
    }

    if (cfg.kind == ModelKind::Single) {
        const auto rep = single_model_experiment(split, cfg.limit, cfg.forest,
                                                 {cfg.n_runs, cfg.seed, default_features(), cfg.threads});
        run.write_reports("single_report", [&](ReportFormat f) { return emit_report(rep, f, run.prov()); });
        run.out() << "accuracy " << format_number(rep.accuracy.mean) << ", tp_rate "
                  << (rep.tp_rate ? format_number(rep.tp_rate->mean) : std::string("n/a")) << " over " << rep.n_runs
                  << " runs\n";
        return kExitOk;
    }

    const NamedPolicy policy{"configured", cfg.policy};
    CascadeExperimentOptions opts;
    opts.n_runs = cfg.n_runs;
    opts.base_seed = cfg.seed;
    opts.n_stages = cfg.stages;
    opts.limit = cfg.limit;
    opts.threads = cfg.threads;
    opts.min_stage_size = cfg.min_stage_size;
    const auto summaries = cascade_experiment(split, cfg.forest, std::span(&policy, 1), opts);
    run.write_reports("cascade_summary", [&](ReportFormat f) { return emit_report(summaries, f, run.prov()); });
    const auto& s = summaries.front();
    run.out() << "TP " << format_number(s.true_positive.mean) << ", FN " << format_number(s.false_negative.mean)
              << ", suspects " << format_number(s.suspects.mean) << " of " << s.n_test << " (mean of " << s.n_runs
              << " runs)\n";
    return kExitOk;
}

/// Limits at the 5th..50th percentiles of the training E. coli values,
/// deduplicated; non-positive quantiles are skipped.
std::vector<double> auto_limits(const Dataset& train) {
    std::vector<double> ecoli;
    for (const auto& m : train.records) ecoli.push_back(static_cast<double>(m.ecoli));
    std::sort(ecoli.begin(), ecoli.end());
    std::vector<double> limits;
    for (int p = 5; p <= 50; p += 5) {
        const double q = quantile_sorted(ecoli, p / 100.0);
        if (q > 0.0 && (limits.empty() || q > limits.back())) limits.push_back(q);
    }
    return limits;
}

int cmd_sweep(Run& run) {
    const auto& cfg = run.cfg();
    const auto split = make_split(cfg, load_prepared(run));
    const auto limits = cfg.limits.empty() ? auto_limits(split.train) : cfg.limits;
    if (limits.empty()) throw ValidationError("sweep: no positive limit among the training percentiles");
    const auto curve =
        limit_sweep(split, limits, cfg.forest, {cfg.n_runs, cfg.seed, default_features(), cfg.threads});
    run.write_reports("sweep", [&](ReportFormat f) { return emit_report(curve, f, run.prov()); });
    run.write("sweep.svg", emit_plot(curve, run.prov()));
    run.out() << "swept " << curve.points.size() << " limits\n";
    return kExitOk;
}

int dispatch(const std::string& name, Run& run) {
    if (name == "ingest") return cmd_ingest(run);
    if (name == "synth") return cmd_synth(run);
    if (name == "split") return cmd_split(run);
    if (name == "train-single") return cmd_train_single(run);
    if (name == "train-cascade") return cmd_train_cascade(run);
    if (name == "classify") return cmd_classify(run);
    if (name == "evaluate") return cmd_evaluate(run);
    return cmd_sweep(run);
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cascade classification of bathing-water E. coli measurements", "wqcascade"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "INI-style run configuration");
    std::deque<std::string> values;
    std::vector<std::pair<CLI::Option*, const char*>> options;
    for (const auto& f : kValueFlags) {
        values.emplace_back();
        options.emplace_back(app.add_option(f.name, values.back(), f.help), f.key);
    }
    bool synth_flag = false;
    bool keep_outliers = false;
    app.add_flag("--synth", synth_flag, "Use the calibrated synthetic generator as the data source");
    app.add_flag("--keep-outliers", keep_outliers, "Keep records flagged as outliers");
    for (const auto& c : kCommands) app.add_subcommand(c.name, c.help);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Settings settings;
        if (!config_path.empty()) settings = read_settings_file(config_path);
        for (const auto& [opt, key] : options) {
            if (opt->count() > 0) settings[key] = opt->as<std::string>();
        }
        if (synth_flag) settings["data.synthetic"] = "true";
        if (keep_outliers) settings["data.drop_outliers"] = "false";
        if (command == "synth") settings["data.synthetic"] = "true";
        if (command == "train-single" || command == "sweep") settings["model.kind"] = "single";
        if (command == "train-cascade") settings["model.kind"] = "cascade";
        const auto* spec = std::find_if(std::begin(kCommands), std::end(kCommands),
                                        [&](const Command& c) { return command == c.name; });
        settings.try_emplace("split.spec", spec->split);

        Run run(command, resolve(settings), out, err);
        const int code = dispatch(command, run);
        run.finish();
        return code;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}

}  // namespace wqcascade::cli
