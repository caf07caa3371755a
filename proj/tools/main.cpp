// ppr: phonological property recognition pipeline over skeleton sequences.
// Subcommands: build, split, train, search, eval, analyze, report.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppr/dataset.hpp"
#include "ppr/eval.hpp"
#include "ppr/models.hpp"
#include "ppr/splits.hpp"
#include "ppr/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppr;

namespace {

/// Relative input paths resolve under PPR_DATA_ROOT when it is set.
fs::path resolve_input(const fs::path& path) {
    if (path.is_absolute()) return path;
    if (const char* root = std::getenv("PPR_DATA_ROOT")) return fs::path(root) / path;
    return path;
}

/// Exclusive advisory lock on the output directory, held until process exit.
class OutputDir {
public:
    explicit OutputDir(const fs::path& dir) : dir_(dir) {
        fs::create_directories(dir_);
        fd_ = ::open((dir_ / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0)
            throw Error("IoError", "cannot lock output directory " + dir_.string());
    }
    ~OutputDir() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    const fs::path& path() const { return dir_; }

    /// Timestamps live only in this sidecar; all artifacts stay byte-stable.
    void log(const std::string& line) const {
        std::ofstream out(dir_ / "run.log", std::ios::app);
        auto now = std::chrono::system_clock::now();
        auto t = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%FT%TZ", std::gmtime(&t));
        out << stamp << " " << line << "\n";
    }

private:
    fs::path dir_;
    int fd_ = -1;
};

ModelConfig parse_model_config(const json& j) {
    ModelConfig c;
    auto variant = model_variant_from_name(j.at("variant").get<std::string>());
    if (!variant) throw Error("InvalidConfig", "unknown model variant");
    c.variant = *variant;
    c.dropout = j.value("dropout", 0.0);
    c.layers = j.value("layers", 2);
    c.hidden_dim = j.value("hidden_dim", 64);
    if (j.contains("cell")) {
        std::string cell = j.at("cell").get<std::string>();
        if (cell != "gru" && cell != "lstm") throw Error("InvalidConfig", "unknown cell");
        c.cell = cell == "gru" ? RnnCell::Gru : RnnCell::Lstm;
    }
    c.blocks = j.value("blocks", 2);
    c.channels = j.value("channels", 16);
    c.temporal_kernel = j.value("temporal_kernel", 9);
    c.temporal_stride = j.value("temporal_stride", 2);
    c.groups = j.value("groups", 1);
    return c;
}

TrainConfig parse_train_config(const json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", 1e-3);
    c.scheduler_step_size = j.value("scheduler_step_size", 10);
    c.gamma = j.value("gamma", 1.0);
    c.epochs = j.value("epochs", 30);
    c.batch_size = j.value("batch_size", 16);
    c.dropout = j.value("dropout", -1.0);
    c.seed = j.value("seed", static_cast<std::uint64_t>(0));
    c.warmup_epochs = j.value("warmup_epochs", 0);
    if (j.contains("class_weighting")) {
        auto w = class_weighting_from_name(j.at("class_weighting").get<std::string>());
        if (!w) throw Error("InvalidConfig", "unknown class_weighting");
        c.class_weighting = *w;
    }
    return c;
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("FormatError", path.string() + ": " + e.what());
    }
}

struct Experiment {
    Dataset dataset;
    SplitManifest manifest;
    ModelConfig model;
    TrainConfig train_cfg;
    json raw;
};

Experiment load_experiment(const fs::path& config_path) {
    json doc = load_json_file(resolve_input(config_path));
    Experiment exp;
    exp.raw = doc;
    exp.dataset = load_dataset(resolve_input(doc.at("dataset").get<std::string>()));
    exp.manifest = load_manifest(resolve_input(doc.at("manifest").get<std::string>()));
    std::string hash = dataset_content_hash(exp.dataset.records);
    if (hash != exp.manifest.dataset_hash)
        throw Error("StaleManifest", "manifest was built for " + exp.manifest.dataset_hash +
                                         " but the dataset hashes to " + hash);
    if (doc.contains("property")) {
        auto kind = property_kind_from_name(doc.at("property").get<std::string>());
        if (!kind || *kind != exp.manifest.spec.kind)
            throw Error("InvalidConfig", "config names property \"" +
                                             doc.at("property").get<std::string>() +
                                             "\" but the manifest splits " +
                                             std::string(property_kind_name(exp.manifest.spec.kind)));
    }
    if (doc.contains("tracker")) {
        auto tracker = tracker_from_name(doc.at("tracker").get<std::string>());
        if (!tracker || *tracker != exp.dataset.tracker)
            throw Error("InvalidConfig", "config names tracker \"" +
                                             doc.at("tracker").get<std::string>() +
                                             "\" but the dataset was built with " +
                                             std::string(tracker_name(exp.dataset.tracker)));
    }
    exp.model = parse_model_config(doc.at("model"));
    exp.model.property = exp.manifest.spec.kind;
    if (doc.contains("train")) exp.train_cfg = parse_train_config(doc.at("train"));
    return exp;
}

std::string sanitize(std::string name) {
    for (char& c : name)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return name;
}

int cmd_build(const fs::path& lexicon, const fs::path& index, const fs::path& keypoints,
              const std::string& tracker_name_arg, bool no_norm_coords, int frames,
              const fs::path& out) {
    OutputDir outdir(out);
    auto tracker = tracker_from_name(tracker_name_arg);
    if (!tracker) throw Error("InvalidConfig", "unknown tracker " + tracker_name_arg);

    auto entries = parse_lexicon(resolve_input(lexicon));
    auto videos = parse_video_index(resolve_input(index));

    BuildOptions options;
    options.tracker = *tracker;
    options.normalize_coordinates = !no_norm_coords;
    options.target_frames = frames;

    JoinReport report;
    std::vector<std::string> warnings;
    Dataset dataset =
        build_dataset(entries, videos, resolve_input(keypoints), options, &report, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    save_dataset(dataset, outdir.path() / "dataset.json");
    json jr;
    jr["matched_videos"] = report.matched_videos;
    jr["matched_glosses"] = report.matched_glosses;
    jr["unmatched_lexicon_glosses"] = report.unmatched_lexicon_glosses;
    jr["unmatched_index_glosses"] = report.unmatched_index_glosses;
    std::ofstream(outdir.path() / "join_report.json") << jr.dump(2) << "\n";

    std::cout << "matched_videos=" << report.matched_videos
              << " matched_glosses=" << report.matched_glosses
              << " records=" << dataset.records.size() << "\n";
    outdir.log("build records=" + std::to_string(dataset.records.size()));
    return 0;
}

int cmd_split(const fs::path& dataset_path, const std::string& property,
              const std::string& mode, const std::vector<double>& ratios,
              std::uint64_t seed, const fs::path& out) {
    OutputDir outdir(out);
    auto kind = property_kind_from_name(property);
    if (!kind) throw Error("InvalidConfig", "unknown property " + property);
    auto split_mode = split_mode_from_name(mode);
    if (!split_mode) throw Error("InvalidConfig", "unknown mode " + mode);

    Dataset dataset = load_dataset(resolve_input(dataset_path));
    SplitSpec spec;
    spec.kind = *kind;
    spec.mode = *split_mode;
    if (!ratios.empty()) {
        if (ratios.size() != 3) throw Error("InvalidConfig", "--ratios needs 3 values");
        spec.ratios = {ratios[0], ratios[1], ratios[2]};
    }
    spec.seed = seed;

    SplitManifest manifest = spec.mode == SplitMode::Phoneme
                                 ? split_phoneme(dataset.records, spec)
                                 : split_gloss(dataset.records, spec);
    auto violations = verify_split(manifest, dataset.records);
    if (!violations.empty()) {
        for (const auto& v : violations)
            std::cerr << "error: SplitInvariant: " << v.kind << ": " << v.detail << "\n";
        return 1;
    }

    fs::path file = outdir.path() / ("split_" + sanitize(property) + "_" + mode + ".json");
    save_manifest(manifest, file);

    // per-class allocation table
    std::map<std::string, std::array<long long, 3>> table;
    std::map<std::string, int> cut_of;
    for (const auto& id : manifest.train) cut_of[id] = 0;
    for (const auto& id : manifest.val) cut_of[id] = 1;
    for (const auto& id : manifest.test) cut_of[id] = 2;
    for (const auto& rec : dataset.records)
        ++table[rec.label.code(*kind)][static_cast<std::size_t>(cut_of[rec.video_id])];
    std::cout << "class\ttrain\tval\ttest\n";
    for (const auto& [code, counts] : table)
        std::cout << code << "\t" << counts[0] << "\t" << counts[1] << "\t" << counts[2]
                  << "\n";
    std::cout << "manifest=" << file.string() << "\n";
    outdir.log("split " + property + " " + mode + " seed=" + std::to_string(seed));
    return 0;
}

int cmd_train(const fs::path& config_path, const fs::path& out) {
    OutputDir outdir(out);
    Experiment exp = load_experiment(config_path);

    SkeletonGraph graph = build_skeleton_graph();
    const SkeletonGraph* graph_ptr =
        exp.model.variant == ModelVariant::Stgcn ? &graph : nullptr;

    TrainResult result = train(exp.dataset, exp.manifest, exp.model, exp.train_cfg, graph_ptr);
    save_checkpoint(result.model, outdir.path() / "model.ckpt");
    save_history(result.history, outdir.path() / "history.jsonl");
    const auto& best = result.history.epochs[static_cast<std::size_t>(result.history.best_epoch)];
    std::cout << "best_epoch=" << result.history.best_epoch << " val_mcc=" << best.val_mcc
              << " val_accuracy=" << best.val_accuracy << "\n";

    if (exp.raw.value("final_fit", false)) {
        TrainedModel refit = final_fit(exp.dataset, exp.manifest, exp.model, exp.train_cfg,
                                       result.history.best_epoch + 1, graph_ptr);
        save_checkpoint(refit, outdir.path() / "model_final.ckpt");
        std::cout << "final_fit_epochs=" << result.history.best_epoch + 1 << "\n";
    }
    outdir.log("train " + std::string(model_variant_name(exp.model.variant)));
    return 0;
}

int cmd_search(const fs::path& config_path, const fs::path& out) {
    OutputDir outdir(out);
    Experiment exp = load_experiment(config_path);
    if (!exp.raw.contains("search"))
        throw Error("InvalidConfig", "config has no \"search\" section");
    SearchSpace space;
    space.budget = exp.raw.at("search").value("budget", 1);
    for (const auto& [key, values] : exp.raw.at("search").at("space").items())
        for (const auto& v : values) space.candidates[key].push_back(v);

    SkeletonGraph graph = build_skeleton_graph();
    const SkeletonGraph* graph_ptr =
        exp.model.variant == ModelVariant::Stgcn ? &graph : nullptr;

    SearchResult result = search(exp.dataset, exp.manifest, exp.model, exp.train_cfg, space,
                                 exp.train_cfg.seed, graph_ptr);

    std::ofstream log(outdir.path() / "trials.jsonl");
    for (const auto& trial : result.trials) {
        json t;
        t["index"] = trial.index;
        t["sampled"] = trial.sampled;
        t["val_mcc"] = trial.val_mcc;
        t["status"] = trial.status;
        log << t.dump() << "\n";
    }
    json best;
    best["best_trial"] = result.best_trial;
    best["val_mcc"] = result.val_mcc;
    best["sampled"] = result.trials[static_cast<std::size_t>(result.best_trial)].sampled;
    std::ofstream(outdir.path() / "best_config.json") << best.dump(2) << "\n";
    std::cout << "trials=" << result.trials.size() << " best_trial=" << result.best_trial
              << " val_mcc=" << result.val_mcc << "\n";
    outdir.log("search trials=" + std::to_string(result.trials.size()));
    return 0;
}

int cmd_eval(const fs::path& dataset_path, const fs::path& manifest_path,
             const fs::path& model_path, const std::string& which,
             const std::string& name, const fs::path& out) {
    OutputDir outdir(out);
    Dataset dataset = load_dataset(resolve_input(dataset_path));
    SplitManifest manifest = load_manifest(resolve_input(manifest_path));
    std::string hash = dataset_content_hash(dataset.records);
    if (hash != manifest.dataset_hash)
        throw Error("StaleManifest", "manifest/dataset hash mismatch");
    TrainedModel model = load_checkpoint(resolve_input(model_path));
    if (model.config.property != manifest.spec.kind)
        throw Error("InvalidConfig", "model predicts another property than the manifest");

    const std::vector<std::string>* ids = &manifest.test;
    if (which == "train") ids = &manifest.train;
    else if (which == "val") ids = &manifest.val;
    else if (which != "test") throw Error("InvalidConfig", "--split must be train|val|test");

    SkeletonGraph graph = build_skeleton_graph();
    const SkeletonGraph* graph_ptr =
        model.config.variant == ModelVariant::Stgcn ? &graph : nullptr;
    EvalReport report = evaluate_model(model, dataset, *ids, manifest.spec.mode, graph_ptr);
    if (!name.empty()) report.model_name = name;

    fs::path file = outdir.path() / ("report_" + sanitize(report.model_name) + "_" +
                                     sanitize(std::string(property_kind_name(report.property))) +
                                     "_" + std::string(split_mode_name(report.mode)) + "_" +
                                     which + ".json");
    save_report(report, file);
    const auto& m = report.metric_set;
    std::cout << "accuracy=" << m.accuracy << " balanced_accuracy=" << m.balanced_accuracy
              << " mcc=" << m.mcc << " ci=" << report.ci_half_width << "\n"
              << "report=" << file.string() << "\n";
    outdir.log("eval " + report.model_name + " on " + which);
    return 0;
}

int cmd_analyze(const std::vector<std::string>& report_paths, const fs::path& out) {
    OutputDir outdir(out);
    if (report_paths.size() < 2)
        throw Error("InvalidConfig", "analyze needs at least 2 reports");

    std::map<std::pair<std::string, std::string>, std::vector<EvalReport>> groups;
    for (const auto& p : report_paths) {
        EvalReport r = load_report(resolve_input(p));
        groups[{std::string(split_mode_name(r.mode)),
                std::string(property_kind_name(r.property))}]
            .push_back(std::move(r));
    }

    json doc;
    doc["format"] = "ppr-agreement-v1";
    json out_groups = json::array();
    std::map<std::string, std::vector<std::set<std::string>>> joint_by_mode, tests_by_mode;
    for (const auto& [key, reports] : groups) {
        const auto& [mode, property] = key;
        JointMisclassification joint = joint_misclassified(reports);
        json g;
        g["mode"] = mode;
        g["property"] = property;
        json models = json::array();
        for (const auto& r : reports) models.push_back(r.model_name);
        g["models"] = models;
        g["joint_misclassified"] = joint.ids;
        g["categories"] = reports.front().classes;
        if (joint.ids.size() >= 2) {
            FleissResult fk = fleiss_kappa(joint.ratings, joint.n_models);
            g["kappa_defined"] = fk.defined;
            if (fk.defined) g["kappa"] = fk.kappa;
            g["observed_agreement"] = fk.observed_agreement;
            g["expected_agreement"] = fk.expected_agreement;
        } else {
            g["kappa_defined"] = false;
            g["note"] = "fewer than 2 jointly misclassified videos";
        }
        out_groups.push_back(std::move(g));

        std::set<std::string> test_ids;
        for (const auto& rec : reports.front().records) test_ids.insert(rec.video_id);
        joint_by_mode[mode].emplace_back(joint.ids.begin(), joint.ids.end());
        tests_by_mode[mode].push_back(std::move(test_ids));
    }
    doc["groups"] = std::move(out_groups);

    json cross = json::object();
    for (const auto& [mode, joint_sets] : joint_by_mode) {
        if (joint_sets.size() < 2) continue;
        auto rates = cross_task_misclassification(joint_sets, tests_by_mode[mode]);
        json by_m = json::object();
        for (const auto& [m, bucket] : rates) {
            json b;
            b["shared_videos"] = bucket.shared_videos;
            b["jointly_misclassified"] = bucket.jointly_misclassified;
            if (bucket.rate) b["rate"] = *bucket.rate;
            by_m[std::to_string(m)] = std::move(b);
        }
        cross[mode] = std::move(by_m);
    }
    doc["cross_task"] = std::move(cross);

    std::ofstream(outdir.path() / "agreement.json") << doc.dump(2) << "\n";
    std::cout << "groups=" << groups.size()
              << " report=" << (outdir.path() / "agreement.json").string() << "\n";
    outdir.log("analyze reports=" + std::to_string(report_paths.size()));
    return 0;
}

int cmd_report(const std::vector<std::string>& report_paths, const fs::path& out) {
    OutputDir outdir(out);
    if (report_paths.empty()) throw Error("InvalidConfig", "report needs input reports");

    // (mode, model) rows by property columns
    std::vector<std::string> properties;
    for (PropertyKind kind : all_property_kinds())
        properties.emplace_back(property_kind_name(kind));
    struct Cell {
        double accuracy, ci, balanced;
    };
    std::map<std::pair<std::string, std::string>, std::map<std::string, Cell>> rows;
    for (const auto& p : report_paths) {
        EvalReport r = load_report(resolve_input(p));
        rows[{std::string(split_mode_name(r.mode)), r.model_name}]
            [std::string(property_kind_name(r.property))] =
                Cell{r.metric_set.accuracy, r.ci_half_width, r.metric_set.balanced_accuracy};
    }

    std::ostringstream text, csv;
    csv << "mode,model";
    for (const auto& p : properties) csv << "," << p << "_A," << p << "_ci," << p << "_Abar";
    csv << "\n";
    text << "A ± ci / Abar, percent\n";
    for (const auto& [key, cells] : rows) {
        const auto& [mode, model] = key;
        char line[64];
        std::snprintf(line, sizeof line, "%-8s %-9s", mode.c_str(), model.c_str());
        text << line;
        csv << mode << "," << model;
        for (const auto& p : properties) {
            auto it = cells.find(p);
            if (it == cells.end()) {
                text << "  -";
                csv << ",,,";
                continue;
            }
            char cell[64];
            std::snprintf(cell, sizeof cell, "  %s: %.1f ± %.1f / %.1f", p.c_str(),
                          100 * it->second.accuracy, 100 * it->second.ci,
                          100 * it->second.balanced);
            text << cell;
            char c2[64];
            std::snprintf(c2, sizeof c2, ",%.4f,%.4f,%.4f", it->second.accuracy,
                          it->second.ci, it->second.balanced);
            csv << c2;
        }
        text << "\n";
        csv << "\n";
    }
    std::ofstream(outdir.path() / "summary.txt") << text.str();
    std::ofstream(outdir.path() / "summary.csv") << csv.str();
    std::cout << text.str();
    outdir.log("report inputs=" + std::to_string(report_paths.size()));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phonological property recognition over skeleton sequences"};
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build", "join lexicon and video index, load keypoints");
    fs::path lexicon, index, keypoints, out;
    std::string tracker = "pose2d";
    bool no_norm = false;
    int frames = 150;
    build->add_option("--lexicon", lexicon)->required();
    build->add_option("--index", index)->required();
    build->add_option("--keypoints", keypoints)->required();
    build->add_option("--tracker", tracker, "pose2d or mocap3d");
    build->add_flag("--no-normalize-coords", no_norm);
    build->add_option("--frames", frames, "sequence length after normalization");
    build->add_option("--out", out)->required();

    auto* split = app.add_subcommand("split", "generate a stratified split manifest");
    fs::path split_dataset;
    std::string property, mode = "phoneme";
    std::vector<double> ratios;
    std::uint64_t seed = 0;
    split->add_option("--dataset", split_dataset)->required();
    split->add_option("--property", property)->required();
    split->add_option("--mode", mode, "phoneme or gloss");
    split->add_option("--ratios", ratios, "train val test ratios")->expected(3);
    split->add_option("--seed", seed);
    fs::path split_out;
    split->add_option("--out", split_out)->required();

    auto* train_cmd = app.add_subcommand("train", "train one model from a config file");
    fs::path train_config, train_out;
    train_cmd->add_option("--config", train_config)->required();
    train_cmd->add_option("--out", train_out)->required();

    auto* search_cmd = app.add_subcommand("search", "hyperparameter search from a config file");
    fs::path search_config, search_out;
    search_cmd->add_option("--config", search_config)->required();
    search_cmd->add_option("--out", search_out)->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    fs::path eval_dataset, eval_manifest, eval_model, eval_out;
    std::string eval_split = "test", eval_name;
    eval_cmd->add_option("--dataset", eval_dataset)->required();
    eval_cmd->add_option("--manifest", eval_manifest)->required();
    eval_cmd->add_option("--model", eval_model)->required();
    eval_cmd->add_option("--split", eval_split, "train, val or test");
    eval_cmd->add_option("--name", eval_name, "model name used in the report");
    eval_cmd->add_option("--out", eval_out)->required();

    auto* analyze_cmd = app.add_subcommand("analyze", "agreement and cross-task analysis");
    std::vector<std::string> analyze_reports;
    fs::path analyze_out;
    analyze_cmd->add_option("reports", analyze_reports)->required();
    analyze_cmd->add_option("--out", analyze_out)->required();

    auto* report_cmd = app.add_subcommand("report", "summary table from eval reports");
    std::vector<std::string> report_reports;
    fs::path report_out;
    report_cmd->add_option("reports", report_reports)->required();
    report_cmd->add_option("--out", report_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed())
            return cmd_build(lexicon, index, keypoints, tracker, no_norm, frames, out);
        if (split->parsed())
            return cmd_split(split_dataset, property, mode, ratios, seed, split_out);
        if (train_cmd->parsed()) return cmd_train(train_config, train_out);
        if (search_cmd->parsed()) return cmd_search(search_config, search_out);
        if (eval_cmd->parsed())
            return cmd_eval(eval_dataset, eval_manifest, eval_model, eval_split, eval_name,
                            eval_out);
        if (analyze_cmd->parsed()) return cmd_analyze(analyze_reports, analyze_out);
        if (report_cmd->parsed()) return cmd_report(report_reports, report_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Unhandled: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
