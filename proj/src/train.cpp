#include "ppr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace ppr {

using nlohmann::json;

std::string_view class_weighting_name(ClassWeighting w) {
    return w == ClassWeighting::None ? "none" : "inverse_frequency";
}

std::optional<ClassWeighting> class_weighting_from_name(std::string_view name) {
    if (name == "none") return ClassWeighting::None;
    if (name == "inverse_frequency") return ClassWeighting::InverseFrequency;
    return std::nullopt;
}

double scheduled_lr(const TrainConfig& config, int epoch) {
    double lr = config.learning_rate *
                std::pow(config.gamma, epoch / std::max(1, config.scheduler_step_size));
    if (config.warmup_epochs > 0 && epoch < config.warmup_epochs)
        lr *= static_cast<double>(epoch + 1) / static_cast<double>(config.warmup_epochs);
    return lr;
}

// JSON lines: one header line, then one line per epoch.
void save_history(const TrainHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    json header = {{"format", "ppr-history-v1"}, {"best_epoch", history.best_epoch}};
    out << header.dump() << "\n";
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& s = history.epochs[e];
        json line = {{"epoch", e},
                     {"train_loss", s.train_loss},
                     {"train_accuracy", s.train_accuracy},
                     {"val_mcc", s.val_mcc},
                     {"val_accuracy", s.val_accuracy},
                     {"learning_rate", s.learning_rate}};
        out << line.dump() << "\n";
    }
}

TrainHistory load_history(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error("FormatError", path.string() + ": empty");
    json header = json::parse(line);
    if (header.value("format", "") != "ppr-history-v1")
        throw Error("FormatError", path.string() + ": not a history file");
    TrainHistory history;
    history.best_epoch = header.at("best_epoch").get<int>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json e = json::parse(line);
        history.epochs.push_back({e.at("train_loss").get<double>(),
                                  e.at("train_accuracy").get<double>(),
                                  e.at("val_mcc").get<double>(),
                                  e.at("val_accuracy").get<double>(),
                                  e.at("learning_rate").get<double>()});
    }
    return history;
}

namespace {

std::vector<const SignRecord*> resolve_ids(const Dataset& dataset,
                                           const std::vector<std::string>& ids) {
    std::vector<const SignRecord*> records;
    records.reserve(ids.size());
    for (const auto& id : ids) {
        const SignRecord* rec = dataset.find(id);
        if (!rec) throw Error("UnknownId", id + " not in dataset");
        records.push_back(rec);
    }
    return records;
}

std::vector<int> class_targets(const std::vector<const SignRecord*>& records,
                               PropertyKind property,
                               const std::vector<std::string>& class_codes) {
    std::vector<int> targets;
    targets.reserve(records.size());
    for (const auto* rec : records) {
        const std::string& code = rec->label.code(property);
        auto it = std::find(class_codes.begin(), class_codes.end(), code);
        if (it == class_codes.end())
            throw UnknownValue(property, code);
        targets.push_back(static_cast<int>(it - class_codes.begin()));
    }
    return targets;
}

struct AdamState {
    std::vector<ad::Tensor> m, v;
    long long t = 0;
};

AdamState make_adam(const ParamMap& params) {
    AdamState state;
    for (const auto& [name, tensor] : params.items) {
        state.m.push_back(ad::Tensor::zeros(tensor.shape));
        state.v.push_back(ad::Tensor::zeros(tensor.shape));
    }
    return state;
}

void adam_step(ParamMap& params, const std::vector<ad::Tensor>& grads, AdamState& state,
               double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++state.t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < params.items.size(); ++p) {
        auto& theta = params.items[p].second.v;
        const auto& g = grads[p].v;
        auto& m = state.m[p].v;
        auto& v = state.v[p].v;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1 * m[i] + (1 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
            theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
}

/// One training step; returns (loss, correct-in-batch).
std::pair<double, long long> run_batch(TrainedModel& model, AdamState& adam,
                                       const std::vector<const SignRecord*>& records,
                                       const std::vector<int>& targets,
                                       const std::vector<std::size_t>& batch_indices,
                                       const std::vector<double>& class_weights,
                                       const SkeletonGraph* graph, double lr,
                                       Rng& dropout_rng) {
    std::vector<const SkeletonSequence*> seqs;
    std::vector<int> batch_targets;
    seqs.reserve(batch_indices.size());
    for (std::size_t idx : batch_indices) {
        seqs.push_back(&records[idx]->sequence);
        batch_targets.push_back(targets[idx]);
    }

    ad::Tape tape;
    ParamVars params = register_params(tape, model);
    ad::Var logits;
    switch (model.config.variant) {
    case ModelVariant::Mlp: {
        long long B = static_cast<long long>(seqs.size());
        long long D = model.config.flat_input_dim();
        ad::Tensor x = ad::Tensor::zeros({B, D});
        for (long long b = 0; b < B; ++b) {
            const auto& data = seqs[static_cast<std::size_t>(b)]->data;
            if (static_cast<long long>(data.size()) != D)
                throw ad::ShapeMismatch("sequence does not match the model input size");
            std::copy(data.begin(), data.end(),
                      x.v.begin() + static_cast<std::ptrdiff_t>(b * D));
        }
        logits = mlp_logits(tape, model.config, params, tape.constant(std::move(x)),
                            &dropout_rng);
        break;
    }
    case ModelVariant::Rnn: {
        long long B = static_cast<long long>(seqs.size());
        int T = seqs[0]->frames;
        long long D = model.config.frame_dim();
        std::vector<ad::Var> frames;
        frames.reserve(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) {
            ad::Tensor f = ad::Tensor::zeros({B, D});
            for (long long b = 0; b < B; ++b)
                std::copy_n(seqs[static_cast<std::size_t>(b)]->data.begin() +
                                static_cast<std::ptrdiff_t>(t) * D,
                            static_cast<std::size_t>(D),
                            f.v.begin() + static_cast<std::ptrdiff_t>(b * D));
            frames.push_back(tape.constant(std::move(f)));
        }
        logits = rnn_logits(tape, model.config, params, frames, &dropout_rng);
        break;
    }
    case ModelVariant::Stgcn: {
        long long B = static_cast<long long>(seqs.size());
        long long T = seqs[0]->frames;
        long long J = seqs[0]->joints();
        ad::Tensor x = ad::Tensor::zeros({B, T, J, 3});
        for (long long b = 0; b < B; ++b) {
            const auto& data = seqs[static_cast<std::size_t>(b)]->data;
            if (static_cast<long long>(data.size()) != T * J * 3)
                throw ad::ShapeMismatch("sequence does not match the model input size");
            std::copy(data.begin(), data.end(),
                      x.v.begin() + static_cast<std::ptrdiff_t>(b * T * J * 3));
        }
        logits = stgcn_logits(tape, model.config, params, tape.constant(std::move(x)),
                              *graph, &dropout_rng);
        break;
    }
    default:
        throw Error("InvalidConfig", "baseline has no gradient step");
    }

    auto ce = ad::softmax_cross_entropy(tape, logits, batch_targets, class_weights);
    double loss = tape.val(ce.loss).v[0];
    tape.backward(ce.loss);

    std::vector<ad::Tensor> grads;
    grads.reserve(model.params.items.size());
    for (const auto& [name, tensor] : model.params.items)
        grads.push_back(tape.grad(params.at(name)));
    adam_step(model.params, grads, adam, lr);

    long long correct = 0;
    long long K = model.config.num_classes;
    for (std::size_t i = 0; i < batch_targets.size(); ++i) {
        const double* prow = &ce.probabilities.v[i * static_cast<std::size_t>(K)];
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (prow[k] > prow[best]) best = k;
        if (best == batch_targets[i]) ++correct;
    }
    return {loss, correct};
}

std::vector<double> make_class_weights(const TrainConfig& config,
                                       const std::vector<int>& targets, int num_classes) {
    if (config.class_weighting == ClassWeighting::None) return {};
    std::vector<long long> counts(static_cast<std::size_t>(num_classes), 0);
    for (int t : targets) ++counts[static_cast<std::size_t>(t)];
    std::vector<double> weights(static_cast<std::size_t>(num_classes), 0.0);
    double total = static_cast<double>(targets.size());
    for (int k = 0; k < num_classes; ++k)
        weights[static_cast<std::size_t>(k)] =
            counts[static_cast<std::size_t>(k)] > 0
                ? total / (static_cast<double>(num_classes) *
                           static_cast<double>(counts[static_cast<std::size_t>(k)]))
                : 0.0;
    return weights;
}

struct FitOutcome {
    TrainedModel model;
    TrainHistory history;
};

/// The shared epoch loop. When val_records is empty no model selection
/// happens and the final parameters are kept.
FitOutcome fit(ModelConfig model_config, TrainConfig train_config,
               const std::vector<const SignRecord*>& train_records,
               const std::vector<const SignRecord*>& val_records,
               const std::string& split_hash, const SkeletonGraph* graph) {
    if (train_records.empty()) throw EmptySplit("train");
    if (train_config.dropout >= 0) model_config.dropout = train_config.dropout;

    if (model_config.class_codes.empty()) {
        model_config.class_codes = supported_class_codes(train_records, model_config.property);
        model_config.num_classes = static_cast<int>(model_config.class_codes.size());
    }
    model_config.input_frames = train_records[0]->sequence.frames;
    model_config.input_joints = train_records[0]->sequence.joints();

    std::vector<int> train_targets =
        class_targets(train_records, model_config.property, model_config.class_codes);
    std::vector<int> val_targets =
        class_targets(val_records, model_config.property, model_config.class_codes);
    std::vector<double> weights =
        make_class_weights(train_config, train_targets, model_config.num_classes);

    FitOutcome out;

    if (model_config.variant == ModelVariant::Baseline) {
        out.model.config = model_config;
        out.model.provenance = {train_config.seed, split_hash, 0};
        std::vector<long long> counts(static_cast<std::size_t>(model_config.num_classes), 0);
        for (int t : train_targets) ++counts[static_cast<std::size_t>(t)];
        out.model.majority_class = static_cast<int>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
        EpochStats stats;
        long long correct = 0;
        for (int t : train_targets)
            if (t == out.model.majority_class) ++correct;
        stats.train_accuracy =
            static_cast<double>(correct) / static_cast<double>(train_targets.size());
        if (!val_records.empty()) {
            ConfusionMatrix cm(model_config.num_classes);
            for (int t : val_targets) cm.add(t, out.model.majority_class);
            MetricSet ms = metrics(cm);
            stats.val_mcc = ms.mcc;
            stats.val_accuracy = ms.accuracy;
        }
        out.history.epochs.push_back(stats);
        out.history.best_epoch = 0;
        return out;
    }

    if (graph == nullptr && model_config.variant == ModelVariant::Stgcn)
        throw Error("InvalidConfig", "stgcn training needs a graph");

    out.model = init_model(model_config, train_config.seed);
    out.model.provenance = {train_config.seed, split_hash, train_config.epochs};
    AdamState adam = make_adam(out.model.params);

    const bool select = !val_records.empty();
    double best_mcc = -2.0;
    ParamMap best_params;

    std::vector<const SkeletonSequence*> val_seqs;
    for (const auto* rec : val_records) val_seqs.push_back(&rec->sequence);

    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        double lr = scheduled_lr(train_config, epoch);
        std::vector<std::size_t> order(train_records.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng = Rng(train_config.seed).fork(1000 + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);
        Rng dropout_rng = Rng(train_config.seed).fork(7000 + static_cast<std::uint64_t>(epoch));

        double loss_sum = 0;
        long long correct = 0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(train_config.batch_size), ++batch_index) {
            std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(train_config.batch_size));
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
            try {
                auto [loss, batch_correct] =
                    run_batch(out.model, adam, train_records, train_targets, batch, weights,
                              graph, lr, dropout_rng);
                if (!std::isfinite(loss)) throw NonFiniteLoss(epoch, batch_index);
                loss_sum += loss * static_cast<double>(batch.size());
                correct += batch_correct;
            } catch (const ad::NonFiniteTensor&) {
                throw NonFiniteLoss(epoch, batch_index);
            }
        }

        EpochStats stats;
        stats.learning_rate = lr;
        stats.train_loss = loss_sum / static_cast<double>(train_records.size());
        stats.train_accuracy =
            static_cast<double>(correct) / static_cast<double>(train_records.size());
        if (select) {
            std::vector<int> preds;
            try {
                preds = predict_batch(out.model, val_seqs, graph);
            } catch (const ad::NonFiniteTensor&) {
                throw NonFiniteLoss(epoch, -1);
            }
            ConfusionMatrix cm(model_config.num_classes);
            for (std::size_t i = 0; i < preds.size(); ++i)
                cm.add(val_targets[i], preds[i]);
            MetricSet ms = metrics(cm);
            stats.val_mcc = ms.mcc;
            stats.val_accuracy = ms.accuracy;
            if (ms.mcc > best_mcc) {
                best_mcc = ms.mcc;
                out.history.best_epoch = epoch;
                best_params = out.model.params;
            }
        }
        out.history.epochs.push_back(stats);
    }

    if (select) out.model.params = std::move(best_params);
    return out;
}

} // namespace

std::vector<std::string> supported_class_codes(const std::vector<const SignRecord*>& records,
                                               PropertyKind property) {
    std::set<std::string> seen;
    for (const auto* rec : records) seen.insert(rec->label.code(property));
    const Taxonomy& tax = builtin_taxonomy();
    std::vector<std::string> codes;
    for (const auto& value : tax.values(property))
        if (seen.count(value.code)) {
            codes.push_back(value.code);
            seen.erase(value.code);
        }
    for (const auto& code : seen) codes.push_back(code); // non-taxonomy codes, sorted
    return codes;
}

TrainResult train(const Dataset& dataset, const SplitManifest& manifest,
                  ModelConfig model_config, TrainConfig train_config,
                  const SkeletonGraph* graph) {
    model_config.property = manifest.spec.kind;
    auto train_records = resolve_ids(dataset, manifest.train);
    auto val_records = resolve_ids(dataset, manifest.val);
    if (val_records.empty()) throw EmptySplit("val");
    FitOutcome out = fit(model_config, train_config, train_records, val_records,
                         manifest.dataset_hash, graph);
    return {std::move(out.model), std::move(out.history)};
}

TrainedModel final_fit(const Dataset& dataset, const SplitManifest& manifest,
                       ModelConfig model_config, TrainConfig train_config, int epochs,
                       const SkeletonGraph* graph) {
    model_config.property = manifest.spec.kind;
    std::vector<std::string> pool = manifest.train;
    pool.insert(pool.end(), manifest.val.begin(), manifest.val.end());

    std::set<std::string> test_ids(manifest.test.begin(), manifest.test.end());
    for (const auto& id : pool)
        if (test_ids.count(id))
            throw Error("SplitLeak", "test id " + id + " would enter training");

    train_config.epochs = epochs;
    auto pool_records = resolve_ids(dataset, pool);
    FitOutcome out = fit(model_config, train_config, pool_records, {},
                         manifest.dataset_hash, graph);
    out.model.provenance.epochs = epochs;
    return std::move(out.model);
}

EvalReport evaluate_model(const TrainedModel& model, const Dataset& dataset,
                          const std::vector<std::string>& ids, SplitMode mode,
                          const SkeletonGraph* graph) {
    auto records = resolve_ids(dataset, ids);
    if (records.empty()) throw EmptySplit("evaluation");
    std::vector<int> targets =
        class_targets(records, model.config.property, model.config.class_codes);
    std::vector<const SkeletonSequence*> seqs;
    for (const auto* rec : records) seqs.push_back(&rec->sequence);
    std::vector<int> preds = predict_batch(model, seqs, graph);

    std::vector<RecordPrediction> predictions;
    predictions.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        predictions.push_back({records[i]->video_id, targets[i], preds[i]});
    return make_report(model.config.property, mode,
                       std::string(model_variant_name(model.config.variant)),
                       std::string(tracker_name(dataset.tracker)), model.config.class_codes,
                       std::move(predictions));
}

void apply_hyperparameter(ModelConfig& model_config, TrainConfig& train_config,
                          const std::string& name, const json& value) {
    if (name == "learning_rate") train_config.learning_rate = value.get<double>();
    else if (name == "scheduler_step_size") train_config.scheduler_step_size = value.get<int>();
    else if (name == "gamma") train_config.gamma = value.get<double>();
    else if (name == "epochs") train_config.epochs = value.get<int>();
    else if (name == "batch_size") train_config.batch_size = value.get<int>();
    else if (name == "dropout") train_config.dropout = value.get<double>();
    else if (name == "warmup_epochs") train_config.warmup_epochs = value.get<int>();
    else if (name == "class_weighting") {
        auto w = class_weighting_from_name(value.get<std::string>());
        if (!w) throw Error("InvalidConfig", "unknown class_weighting");
        train_config.class_weighting = *w;
    } else if (name == "layers") model_config.layers = value.get<int>();
    else if (name == "hidden_dim") model_config.hidden_dim = value.get<int>();
    else if (name == "cell") {
        std::string c = value.get<std::string>();
        if (c != "gru" && c != "lstm") throw Error("InvalidConfig", "unknown cell");
        model_config.cell = c == "gru" ? RnnCell::Gru : RnnCell::Lstm;
    } else if (name == "blocks") model_config.blocks = value.get<int>();
    else if (name == "channels" || name == "block_size") model_config.channels = value.get<int>();
    else if (name == "temporal_kernel" || name == "window_size")
        model_config.temporal_kernel = value.get<int>();
    else if (name == "temporal_stride") model_config.temporal_stride = value.get<int>();
    else if (name == "groups") model_config.groups = value.get<int>();
    else throw Error("InvalidConfig", "unknown hyperparameter \"" + name + "\"");
}

SearchResult search(const Dataset& dataset, const SplitManifest& manifest,
                    const ModelConfig& base_model, const TrainConfig& base_train,
                    const SearchSpace& space, std::uint64_t seed,
                    const SkeletonGraph* graph) {
    if (space.budget < 1) throw Error("InvalidConfig", "search budget must be >= 1");
    for (const auto& [name, cands] : space.candidates)
        if (cands.empty()) throw Error("InvalidConfig", "empty candidate set for " + name);

    long long grid = 1;
    for (const auto& [name, cands] : space.candidates)
        grid *= static_cast<long long>(cands.size());
    bool exhaustive = space.budget >= grid;
    int trials_to_run = exhaustive ? static_cast<int>(grid) : space.budget;

    SearchResult result;
    for (int trial = 0; trial < trials_to_run; ++trial) {
        json sampled = json::object();
        if (exhaustive) {
            long long rest = trial;
            for (const auto& [name, cands] : space.candidates) {
                sampled[name] = cands[static_cast<std::size_t>(
                    rest % static_cast<long long>(cands.size()))];
                rest /= static_cast<long long>(cands.size());
            }
        } else {
            Rng rng = Rng(seed).fork(0x5ea2c4 + static_cast<std::uint64_t>(trial));
            for (const auto& [name, cands] : space.candidates)
                sampled[name] = cands[static_cast<std::size_t>(rng.bounded(cands.size()))];
        }

        ModelConfig mc = base_model;
        TrainConfig tc = base_train;
        for (const auto& [name, value] : sampled.items())
            apply_hyperparameter(mc, tc, name, value);

        Trial log;
        log.index = trial;
        log.sampled = sampled;
        try {
            TrainResult run = train(dataset, manifest, mc, tc, graph);
            log.val_mcc = run.history.epochs[static_cast<std::size_t>(run.history.best_epoch)].val_mcc;
            log.status = "ok";
            if (result.best_trial < 0 || log.val_mcc > result.val_mcc) {
                result.best_trial = trial;
                result.val_mcc = log.val_mcc;
                result.model_config = run.model.config;
                result.train_config = tc;
            }
        } catch (const NonFiniteLoss& e) {
            log.ok = false;
            log.status = std::string("aborted: ") + e.what();
        }
        result.trials.push_back(std::move(log));
    }
    if (result.best_trial < 0) throw Error("SearchFailed", "every trial aborted");
    return result;
}

SeedStudyResult seed_study(const Dataset& dataset, const SplitManifest& manifest,
                           const ModelConfig& model_config, const TrainConfig& train_config,
                           int n_seeds, const SkeletonGraph* graph) {
    if (n_seeds < 2) throw Error("InvalidConfig", "seed study needs >= 2 seeds");
    SeedStudyResult result;
    for (int i = 0; i < n_seeds; ++i) {
        TrainConfig tc = train_config;
        tc.seed = train_config.seed + static_cast<std::uint64_t>(i);
        TrainResult run = train(dataset, manifest, model_config, tc, graph);
        EvalReport report =
            evaluate_model(run.model, dataset, manifest.test, manifest.spec.mode, graph);
        result.test_accuracies.push_back(report.metric_set.accuracy);
    }
    double sum = 0;
    for (double a : result.test_accuracies) sum += a;
    result.mean = sum / static_cast<double>(n_seeds);
    double ss = 0;
    for (double a : result.test_accuracies) ss += (a - result.mean) * (a - result.mean);
    result.stddev = std::sqrt(ss / static_cast<double>(n_seeds - 1));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * result.mean,
                  100.0 * result.stddev);
    result.formatted = buf;
    return result;
}

} // namespace ppr
