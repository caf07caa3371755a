#ifndef PPR_TRAIN_HPP
#define PPR_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppr/dataset.hpp"
#include "ppr/eval.hpp"
#include "ppr/models.hpp"
#include "ppr/splits.hpp"

namespace ppr {

enum class ClassWeighting { None, InverseFrequency };

std::string_view class_weighting_name(ClassWeighting w);
std::optional<ClassWeighting> class_weighting_from_name(std::string_view name);

struct TrainConfig {
    double learning_rate = 1e-3;
    int scheduler_step_size = 10; // epochs between decays
    double gamma = 1.0;           // decay factor
    int epochs = 30;
    int batch_size = 16;
    double dropout = -1.0; // >= 0 overrides the model config's dropout
    ClassWeighting class_weighting = ClassWeighting::None;
    std::uint64_t seed = 0;
    int warmup_epochs = 0; // linear ramp before the step schedule
};

/// lr0 * gamma^floor(epoch/step), scaled by (epoch+1)/warmup inside warmup.
double scheduled_lr(const TrainConfig& config, int epoch);

struct EpochStats {
    double train_loss = 0;
    double train_accuracy = 0;
    double val_mcc = 0;
    double val_accuracy = 0;
    double learning_rate = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0; // argmax of validation MCC, earliest on ties
};

void save_history(const TrainHistory& history, const std::filesystem::path& path);
TrainHistory load_history(const std::filesystem::path& path);

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(int epoch, int batch)
        : Error("NonFiniteLoss", "epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch)),
          epoch(epoch), batch(batch) {}
    int epoch;
    int batch;
};

class EmptySplit : public Error {
public:
    explicit EmptySplit(const std::string& which)
        : Error("EmptySplit", which + " split is empty") {}
};

struct TrainResult {
    TrainedModel model;
    TrainHistory history;
};

/// Mini-batch Adam with step-decay scheduling; parameters are restored to the
/// epoch that maximised validation MCC. Deterministic given the seed.
TrainResult train(const Dataset& dataset, const SplitManifest& manifest,
                  ModelConfig model_config, TrainConfig train_config,
                  const SkeletonGraph* graph = nullptr);

/// Retrain from scratch on train+val for a fixed epoch budget; the test split
/// is never touched.
TrainedModel final_fit(const Dataset& dataset, const SplitManifest& manifest,
                       ModelConfig model_config, TrainConfig train_config, int epochs,
                       const SkeletonGraph* graph = nullptr);

/// Evaluation-mode predictions over the given ids, packaged as a report.
EvalReport evaluate_model(const TrainedModel& model, const Dataset& dataset,
                          const std::vector<std::string>& ids, SplitMode mode,
                          const SkeletonGraph* graph = nullptr);

struct SearchSpace {
    /// hyperparameter name -> finite candidate list
    std::map<std::string, std::vector<nlohmann::json>> candidates;
    int budget = 1;
};

struct Trial {
    int index = 0;
    nlohmann::json sampled;
    double val_mcc = 0;
    bool ok = true;
    std::string status; // "ok" or the abort reason
};

struct SearchResult {
    ModelConfig model_config;
    TrainConfig train_config;
    double val_mcc = 0;
    int best_trial = -1;
    std::vector<Trial> trials;
};

/// Seeded search over the candidate sets: exhaustive when the budget covers
/// the whole grid, random sampling otherwise. Non-finite trials are logged
/// and skipped, not fatal.
SearchResult search(const Dataset& dataset, const SplitManifest& manifest,
                    const ModelConfig& base_model, const TrainConfig& base_train,
                    const SearchSpace& space, std::uint64_t seed,
                    const SkeletonGraph* graph = nullptr);

/// Applies one named hyperparameter to the config pair.
void apply_hyperparameter(ModelConfig& model_config, TrainConfig& train_config,
                          const std::string& name, const nlohmann::json& value);

struct SeedStudyResult {
    std::vector<double> test_accuracies;
    double mean = 0;
    double stddev = 0;       // sample standard deviation
    std::string formatted;   // "84.12 ± 0.29"
};

/// Trains n_seeds models differing only in seed and reports the mean and
/// sample standard deviation of test accuracy.
SeedStudyResult seed_study(const Dataset& dataset, const SplitManifest& manifest,
                           const ModelConfig& model_config, const TrainConfig& train_config,
                           int n_seeds = 5, const SkeletonGraph* graph = nullptr);

/// Codes of `property` with support in the given records: taxonomy order for
/// known codes, then lexicographic for the rest.
std::vector<std::string> supported_class_codes(const std::vector<const SignRecord*>& records,
                                               PropertyKind property);

} // namespace ppr

#endif
