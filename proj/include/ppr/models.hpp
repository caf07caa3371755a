#ifndef PPR_MODELS_HPP
#define PPR_MODELS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ppr/autodiff.hpp"
#include "ppr/ingest.hpp"
#include "ppr/phonology.hpp"

namespace ppr {

/// Undirected skeleton graph plus its row-normalized adjacency D^-1 (A + I).
struct SkeletonGraph {
    int nodes = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::string> node_names;
    ad::Tensor a_norm;
};

/// Graph over the 27 canonical upper-body joints. The edges form a tree:
/// nose-eyes, nose-shoulders, shoulder-elbow-wrist per arm, wrist-thumb tip,
/// wrist-finger base knuckles, base-tip per finger.
SkeletonGraph build_skeleton_graph();

/// Arbitrary graph from an edge list (used for toy models and tests).
SkeletonGraph make_graph(int nodes, std::vector<std::pair<int, int>> edges);

bool graph_connected(const SkeletonGraph& graph);

enum class ModelVariant { Baseline, Mlp, Rnn, Stgcn };
enum class RnnCell { Gru, Lstm };

std::string_view model_variant_name(ModelVariant variant);
std::optional<ModelVariant> model_variant_from_name(std::string_view name);

struct ModelConfig {
    ModelVariant variant = ModelVariant::Mlp;
    PropertyKind property = PropertyKind::Flexion;
    int num_classes = 0;
    std::vector<std::string> class_codes; // taxonomy order, training support only

    int input_frames = 150;
    int input_joints = 27;
    int input_channels = 3;

    double dropout = 0.0;

    // mlp / rnn
    int layers = 2;
    int hidden_dim = 64;
    RnnCell cell = RnnCell::Gru;

    // stgcn
    int blocks = 2;
    int channels = 16;        // per block
    int temporal_kernel = 9;  // window size, odd
    int temporal_stride = 2;
    int groups = 1; // accepted for config compatibility; always 1 here

    int flat_input_dim() const { return input_frames * input_joints * input_channels; }
    int frame_dim() const { return input_joints * input_channels; }
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string split_hash;
    int epochs = 0;
};

/// Ordered name -> tensor map; order fixes serialization and update order.
struct ParamMap {
    std::vector<std::pair<std::string, ad::Tensor>> items;

    ad::Tensor& at(const std::string& name);
    const ad::Tensor& at(const std::string& name) const;
    void add(std::string name, ad::Tensor value);
};

struct TrainedModel {
    ModelConfig config;
    ParamMap params;
    Provenance provenance;
    int majority_class = -1; // Baseline only
};

/// Fresh model with seed-keyed uniform (Xavier) init.
TrainedModel init_model(const ModelConfig& config, std::uint64_t seed);

/// Parameters registered on a tape for one forward/backward pass.
struct ParamVars {
    std::map<std::string, ad::Var> vars;
    ad::Var at(const std::string& name) const;
};
ParamVars register_params(ad::Tape& tape, const TrainedModel& model);

/// Batched logits [B,K]. dropout_rng == nullptr means evaluation mode.
ad::Var mlp_logits(ad::Tape& tape, const ModelConfig& config, const ParamVars& params,
                   ad::Var x_flat, Rng* dropout_rng);
ad::Var rnn_logits(ad::Tape& tape, const ModelConfig& config, const ParamVars& params,
                   const std::vector<ad::Var>& frames, Rng* dropout_rng);
ad::Var stgcn_logits(ad::Tape& tape, const ModelConfig& config, const ParamVars& params,
                     ad::Var x_btjc, const SkeletonGraph& graph, Rng* dropout_rng);

/// Per-sequence evaluation-mode forwards.
std::vector<double> forward_mlp(const SkeletonSequence& seq, const TrainedModel& model);
std::vector<double> forward_rnn(const SkeletonSequence& seq, const TrainedModel& model);
std::vector<double> forward_stgcn(const SkeletonSequence& seq, const TrainedModel& model,
                                  const SkeletonGraph& graph);

/// Batched evaluation-mode class predictions.
std::vector<int> predict_batch(const TrainedModel& model,
                               const std::vector<const SkeletonSequence*>& seqs,
                               const SkeletonGraph* graph = nullptr);

/// Argmax with ties broken toward the lowest class index.
int argmax_lowest(const std::vector<double>& logits);

/// Class index for one sequence; the baseline ignores the input.
int predict(const TrainedModel& model, const SkeletonSequence& seq,
            const SkeletonGraph* graph = nullptr);

/// Checkpoint: 8-byte magic, little-endian u64 JSON length, config/provenance
/// JSON with a parameter manifest, then float64 little-endian blobs.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

} // namespace ppr

#endif
