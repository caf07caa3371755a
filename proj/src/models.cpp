#include "ppr/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <set>

#include "json.hpp"

namespace ppr {

using nlohmann::json;

SkeletonGraph make_graph(int nodes, std::vector<std::pair<int, int>> edges) {
    SkeletonGraph graph;
    graph.nodes = nodes;
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || a >= nodes || b >= nodes || a == b)
            throw Error("InvalidGraph", "bad edge");
        graph.edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(graph.edges.begin(), graph.edges.end());
    graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()),
                      graph.edges.end());

    // a_norm = D^-1 (A + I)
    auto n = static_cast<long long>(nodes);
    ad::Tensor a = ad::Tensor::zeros({n, n});
    for (long long i = 0; i < n; ++i) a.v[static_cast<std::size_t>(i * n + i)] = 1.0;
    for (auto [i, j] : graph.edges) {
        a.v[static_cast<std::size_t>(static_cast<long long>(i) * n + j)] = 1.0;
        a.v[static_cast<std::size_t>(static_cast<long long>(j) * n + i)] = 1.0;
    }
    for (long long i = 0; i < n; ++i) {
        double degree = 0;
        for (long long j = 0; j < n; ++j) degree += a.v[static_cast<std::size_t>(i * n + j)];
        for (long long j = 0; j < n; ++j) a.v[static_cast<std::size_t>(i * n + j)] /= degree;
    }
    graph.a_norm = std::move(a);
    return graph;
}

SkeletonGraph build_skeleton_graph() {
    const auto& names = upper_body_joints();
    auto idx = [&](const char* name) {
        auto it = std::find(names.begin(), names.end(), name);
        return static_cast<int>(it - names.begin());
    };
    std::vector<std::pair<int, int>> edges;
    edges.emplace_back(idx("nose"), idx("left_eye"));
    edges.emplace_back(idx("nose"), idx("right_eye"));
    edges.emplace_back(idx("nose"), idx("left_shoulder"));
    edges.emplace_back(idx("nose"), idx("right_shoulder"));
    for (const char* side : {"left", "right"}) {
        std::string s(side);
        int wrist = idx((s + "_wrist").c_str());
        edges.emplace_back(idx((s + "_shoulder").c_str()), idx((s + "_elbow").c_str()));
        edges.emplace_back(idx((s + "_elbow").c_str()), wrist);
        edges.emplace_back(wrist, idx((s + "_thumb_tip").c_str()));
        for (const char* finger : {"index", "middle", "ring", "pinky"}) {
            int base = idx((s + "_" + finger + "_base_knuckle").c_str());
            int tip = idx((s + "_" + finger + "_tip_knuckle").c_str());
            edges.emplace_back(wrist, base);
            edges.emplace_back(base, tip);
        }
    }
    SkeletonGraph graph = make_graph(27, std::move(edges));
    graph.node_names.assign(names.begin(), names.end());
    return graph;
}

bool graph_connected(const SkeletonGraph& graph) {
    if (graph.nodes == 0) return false;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(graph.nodes));
    for (auto [a, b] : graph.edges) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<bool> seen(static_cast<std::size_t>(graph.nodes), false);
    std::deque<int> queue{0};
    seen[0] = true;
    int visited = 0;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        ++visited;
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                queue.push_back(v);
            }
        }
    }
    return visited == graph.nodes;
}

std::string_view model_variant_name(ModelVariant variant) {
    switch (variant) {
    case ModelVariant::Baseline: return "baseline";
    case ModelVariant::Mlp: return "mlp";
    case ModelVariant::Rnn: return "rnn";
    case ModelVariant::Stgcn: return "stgcn";
    }
    return "?";
}

std::optional<ModelVariant> model_variant_from_name(std::string_view name) {
    for (auto v : {ModelVariant::Baseline, ModelVariant::Mlp, ModelVariant::Rnn,
                   ModelVariant::Stgcn})
        if (model_variant_name(v) == name) return v;
    return std::nullopt;
}

ad::Tensor& ParamMap::at(const std::string& name) {
    for (auto& [n, t] : items)
        if (n == name) return t;
    throw Error("UnknownParam", name);
}

const ad::Tensor& ParamMap::at(const std::string& name) const {
    for (const auto& [n, t] : items)
        if (n == name) return t;
    throw Error("UnknownParam", name);
}

void ParamMap::add(std::string name, ad::Tensor value) {
    items.emplace_back(std::move(name), std::move(value));
}

namespace {

ad::Tensor xavier(Rng& rng, long long fan_in, long long fan_out,
                  std::vector<long long> shape) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    ad::Tensor t = ad::Tensor::zeros(std::move(shape));
    for (double& x : t.v) x = rng.uniform(-limit, limit);
    return t;
}

int gate_count(RnnCell cell) { return cell == RnnCell::Gru ? 3 : 4; }

void validate_config(const ModelConfig& c) {
    if (c.num_classes < 1) throw Error("InvalidConfig", "num_classes must be >= 1");
    if (c.variant == ModelVariant::Baseline) return;
    if (c.dropout < 0 || c.dropout >= 1) throw Error("InvalidConfig", "dropout in [0,1)");
    if (c.variant == ModelVariant::Mlp || c.variant == ModelVariant::Rnn) {
        if (c.layers < 1) throw Error("InvalidConfig", "layers must be >= 1");
        if (c.hidden_dim < 1) throw Error("InvalidConfig", "hidden_dim must be >= 1");
    }
    if (c.variant == ModelVariant::Stgcn) {
        if (c.blocks < 1) throw Error("InvalidConfig", "blocks must be >= 1");
        if (c.channels < 1) throw Error("InvalidConfig", "channels must be >= 1");
        if (c.temporal_kernel < 1 || c.temporal_kernel % 2 == 0)
            throw Error("InvalidConfig", "temporal_kernel must be odd");
        if (c.temporal_stride < 1) throw Error("InvalidConfig", "temporal_stride >= 1");
        // "groups" is accepted for config compatibility; the forward ignores it
        if (c.groups < 1) throw Error("InvalidConfig", "groups must be >= 1");
    }
}

} // namespace

TrainedModel init_model(const ModelConfig& config, std::uint64_t seed) {
    validate_config(config);
    TrainedModel model;
    model.config = config;
    model.provenance.seed = seed;
    Rng rng = Rng(seed).fork(0x9a7c);
    const long long K = config.num_classes;

    switch (config.variant) {
    case ModelVariant::Baseline:
        break;
    case ModelVariant::Mlp: {
        long long din = config.flat_input_dim();
        for (int l = 0; l < config.layers; ++l) {
            long long dout = config.hidden_dim;
            model.params.add("mlp.w" + std::to_string(l), xavier(rng, din, dout, {din, dout}));
            model.params.add("mlp.b" + std::to_string(l), ad::Tensor::zeros({dout}));
            din = dout;
        }
        model.params.add("out.w", xavier(rng, din, K, {din, K}));
        model.params.add("out.b", ad::Tensor::zeros({K}));
        break;
    }
    case ModelVariant::Rnn: {
        long long din = config.frame_dim();
        long long H = config.hidden_dim;
        long long G = gate_count(config.cell);
        for (int l = 0; l < config.layers; ++l) {
            std::string p = "rnn" + std::to_string(l) + ".";
            model.params.add(p + "wx", xavier(rng, din, H, {din, G * H}));
            model.params.add(p + "wh", xavier(rng, H, H, {H, G * H}));
            model.params.add(p + "bx", ad::Tensor::zeros({G * H}));
            model.params.add(p + "bh", ad::Tensor::zeros({G * H}));
            din = H;
        }
        model.params.add("out.w", xavier(rng, H, K, {H, K}));
        model.params.add("out.b", ad::Tensor::zeros({K}));
        break;
    }
    case ModelVariant::Stgcn: {
        long long fin = config.input_channels;
        for (int b = 0; b < config.blocks; ++b) {
            std::string p = "block" + std::to_string(b) + ".";
            long long fout = config.channels;
            model.params.add(p + "spatial.w", xavier(rng, fin, fout, {fin, fout}));
            // near-averaging start for the temporal taps
            ad::Tensor kern = ad::Tensor::full({config.temporal_kernel, fout},
                                               1.0 / config.temporal_kernel);
            for (double& x : kern.v) x += 0.02 * rng.uniform(-1.0, 1.0);
            model.params.add(p + "temporal.k", std::move(kern));
            if (fin != fout)
                model.params.add(p + "residual.w", xavier(rng, fin, fout, {fin, fout}));
            fin = fout;
        }
        model.params.add("out.w", xavier(rng, fin, K, {fin, K}));
        model.params.add("out.b", ad::Tensor::zeros({K}));
        break;
    }
    }
    return model;
}

ParamVars register_params(ad::Tape& tape, const TrainedModel& model) {
    ParamVars out;
    for (const auto& [name, tensor] : model.params.items)
        out.vars.emplace(name, tape.input(tensor));
    return out;
}

ad::Var ParamVars::at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw Error("UnknownParam", name);
    return it->second;
}

ad::Var mlp_logits(ad::Tape& tape, const ModelConfig& config, const ParamVars& params,
                   ad::Var x_flat, Rng* dropout_rng) {
    if (tape.val(x_flat).dim(1) != config.flat_input_dim())
        throw ad::ShapeMismatch("mlp input dim");
    ad::Var h = x_flat;
    for (int l = 0; l < config.layers; ++l) {
        h = ad::relu(tape, ad::linear(tape, h, params.at("mlp.w" + std::to_string(l)),
                                      params.at("mlp.b" + std::to_string(l))));
        if (dropout_rng && config.dropout > 0)
            h = ad::dropout(tape, h, config.dropout, *dropout_rng);
    }
    return ad::linear(tape, h, params.at("out.w"), params.at("out.b"));
}

ad::Var rnn_logits(ad::Tape& tape, const ModelConfig& config, const ParamVars& params,
                   const std::vector<ad::Var>& frames, Rng* dropout_rng) {
    if (frames.empty()) throw ad::ShapeMismatch("rnn needs at least one frame");
    long long B = tape.val(frames[0]).dim(0);
    long long H = config.hidden_dim;
    bool gru = config.cell == RnnCell::Gru;

    std::vector<ad::Var> inputs = frames;
    for (int l = 0; l < config.layers; ++l) {
        std::string p = "rnn" + std::to_string(l) + ".";
        ad::Var h = tape.constant(ad::Tensor::zeros({B, H}));
        ad::Var c = gru ? h : tape.constant(ad::Tensor::zeros({B, H}));
        std::vector<ad::Var> outputs;
        outputs.reserve(inputs.size());
        for (ad::Var x_t : inputs) {
            if (gru) {
                ad::GruParams gp{params.at(p + "wx"), params.at(p + "wh"),
                                 params.at(p + "bx"), params.at(p + "bh")};
                h = ad::gru_step(tape, x_t, h, gp);
            } else {
                ad::LstmParams lp{params.at(p + "wx"), params.at(p + "wh"),
                                  params.at(p + "bx"), params.at(p + "bh")};
                ad::LstmState next = ad::lstm_step(tape, x_t, {h, c}, lp);
                h = next.h;
                c = next.c;
            }
            outputs.push_back(h);
        }
        inputs = std::move(outputs);
        // dropout between stacked layers, every time step
        if (dropout_rng && config.dropout > 0 && l + 1 < config.layers)
            for (ad::Var& o : inputs) o = ad::dropout(tape, o, config.dropout, *dropout_rng);
    }
    return ad::linear(tape, inputs.back(), params.at("out.w"), params.at("out.b"));
}

ad::Var stgcn_logits(ad::Tape& tape, const ModelConfig& config, const ParamVars& params,
                     ad::Var x_btjc, const SkeletonGraph& graph, Rng* dropout_rng) {
    const ad::Tensor& x0 = tape.val(x_btjc);
    if (x0.rank() != 4 || x0.dim(2) != graph.nodes)
        throw ad::ShapeMismatch("stgcn input vs graph");
    ad::Var x = x_btjc;
    int pad = (config.temporal_kernel - 1) / 2;
    long long fin = x0.dim(3);
    for (int b = 0; b < config.blocks; ++b) {
        std::string p = "block" + std::to_string(b) + ".";
        ad::Var y = ad::spatial_graph_conv(tape, x, graph.a_norm, params.at(p + "spatial.w"));
        y = ad::relu(tape, y);
        y = ad::temporal_conv_btjf(tape, y, params.at(p + "temporal.k"),
                                   config.temporal_stride, pad);
        ad::Var res = config.temporal_stride > 1
                          ? ad::subsample_time(tape, x, config.temporal_stride)
                          : x;
        if (fin != config.channels)
            res = ad::feature_map(tape, res, params.at(p + "residual.w"));
        y = ad::add(tape, y, res);
        if (dropout_rng && config.dropout > 0)
            y = ad::dropout(tape, y, config.dropout, *dropout_rng);
        x = y;
        fin = config.channels;
    }
    ad::Var pooled = ad::mean_pool_tj(tape, x);
    return ad::linear(tape, pooled, params.at("out.w"), params.at("out.b"));
}

namespace {

ad::Tensor flat_tensor(const SkeletonSequence& seq) {
    return ad::Tensor({1, static_cast<long long>(seq.data.size())}, seq.data);
}

void check_same_shape(const std::vector<const SkeletonSequence*>& seqs) {
    for (const auto* seq : seqs)
        if (seq->frames != seqs[0]->frames || seq->joints() != seqs[0]->joints())
            throw ad::ShapeMismatch("sequences in a batch must share T and J");
}

std::vector<ad::Tensor> frame_tensors(const std::vector<const SkeletonSequence*>& seqs) {
    check_same_shape(seqs);
    long long B = static_cast<long long>(seqs.size());
    int T = seqs[0]->frames;
    long long D = static_cast<long long>(seqs[0]->joints()) * 3;
    std::vector<ad::Tensor> frames;
    frames.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        ad::Tensor f = ad::Tensor::zeros({B, D});
        for (long long b = 0; b < B; ++b)
            std::copy_n(seqs[static_cast<std::size_t>(b)]->data.begin() +
                            static_cast<std::ptrdiff_t>(t) * D,
                        static_cast<std::size_t>(D),
                        f.v.begin() + static_cast<std::ptrdiff_t>(b * D));
        frames.push_back(std::move(f));
    }
    return frames;
}

ad::Tensor btjc_tensor(const std::vector<const SkeletonSequence*>& seqs) {
    check_same_shape(seqs);
    long long B = static_cast<long long>(seqs.size());
    long long T = seqs[0]->frames;
    long long J = seqs[0]->joints();
    ad::Tensor x = ad::Tensor::zeros({B, T, J, 3});
    for (long long b = 0; b < B; ++b)
        std::copy(seqs[static_cast<std::size_t>(b)]->data.begin(),
                  seqs[static_cast<std::size_t>(b)]->data.end(),
                  x.v.begin() + static_cast<std::ptrdiff_t>(b * T * J * 3));
    return x;
}

std::vector<double> row(const ad::Tensor& t, long long r) {
    long long cols = t.dim(1);
    return std::vector<double>(t.v.begin() + static_cast<std::ptrdiff_t>(r * cols),
                               t.v.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
}

} // namespace

std::vector<double> forward_mlp(const SkeletonSequence& seq, const TrainedModel& model) {
    ad::Tape tape;
    ParamVars params = register_params(tape, model);
    ad::Var logits = mlp_logits(tape, model.config, params, tape.constant(flat_tensor(seq)),
                                nullptr);
    return row(tape.val(logits), 0);
}

std::vector<double> forward_rnn(const SkeletonSequence& seq, const TrainedModel& model) {
    ad::Tape tape;
    ParamVars params = register_params(tape, model);
    std::vector<const SkeletonSequence*> one = {&seq};
    std::vector<ad::Var> frames;
    for (auto& f : frame_tensors(one)) frames.push_back(tape.constant(std::move(f)));
    ad::Var logits = rnn_logits(tape, model.config, params, frames, nullptr);
    return row(tape.val(logits), 0);
}

std::vector<double> forward_stgcn(const SkeletonSequence& seq, const TrainedModel& model,
                                  const SkeletonGraph& graph) {
    ad::Tape tape;
    ParamVars params = register_params(tape, model);
    std::vector<const SkeletonSequence*> one = {&seq};
    ad::Var logits = stgcn_logits(tape, model.config, params,
                                  tape.constant(btjc_tensor(one)), graph, nullptr);
    return row(tape.val(logits), 0);
}

int argmax_lowest(const std::vector<double>& logits) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(logits.size()); ++i)
        if (logits[static_cast<std::size_t>(i)] > logits[static_cast<std::size_t>(best)])
            best = i;
    return best;
}

std::vector<int> predict_batch(const TrainedModel& model,
                               const std::vector<const SkeletonSequence*>& seqs,
                               const SkeletonGraph* graph) {
    if (model.config.variant == ModelVariant::Baseline)
        return std::vector<int>(seqs.size(), model.majority_class);
    if (seqs.empty()) return {};

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
        logits = mlp_logits(tape, model.config, params, tape.constant(std::move(x)), nullptr);
        break;
    }
    case ModelVariant::Rnn: {
        std::vector<ad::Var> frames;
        for (auto& f : frame_tensors(seqs)) frames.push_back(tape.constant(std::move(f)));
        logits = rnn_logits(tape, model.config, params, frames, nullptr);
        break;
    }
    case ModelVariant::Stgcn: {
        if (!graph) throw Error("InvalidConfig", "stgcn prediction needs a graph");
        logits = stgcn_logits(tape, model.config, params, tape.constant(btjc_tensor(seqs)),
                              *graph, nullptr);
        break;
    }
    default:
        throw Error("InvalidConfig", "unknown variant");
    }
    const ad::Tensor& out = tape.val(logits);
    std::vector<int> preds;
    preds.reserve(seqs.size());
    for (long long b = 0; b < out.dim(0); ++b) preds.push_back(argmax_lowest(row(out, b)));
    return preds;
}

int predict(const TrainedModel& model, const SkeletonSequence& seq,
            const SkeletonGraph* graph) {
    return predict_batch(model, {&seq}, graph)[0];
}

// ---- checkpoint io ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'P', 'R', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((x >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) {
        int c = in.get();
        if (c == EOF) throw FormatError("truncated checkpoint");
        x |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return x;
}

json config_to_json(const ModelConfig& c) {
    json j;
    j["variant"] = std::string(model_variant_name(c.variant));
    j["property"] = std::string(property_kind_name(c.property));
    j["num_classes"] = c.num_classes;
    j["class_codes"] = c.class_codes;
    j["input_frames"] = c.input_frames;
    j["input_joints"] = c.input_joints;
    j["input_channels"] = c.input_channels;
    j["dropout"] = c.dropout;
    j["layers"] = c.layers;
    j["hidden_dim"] = c.hidden_dim;
    j["cell"] = c.cell == RnnCell::Gru ? "gru" : "lstm";
    j["blocks"] = c.blocks;
    j["channels"] = c.channels;
    j["temporal_kernel"] = c.temporal_kernel;
    j["temporal_stride"] = c.temporal_stride;
    j["groups"] = c.groups;
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    auto variant = model_variant_from_name(j.at("variant").get<std::string>());
    if (!variant) throw FormatError("unknown model variant");
    c.variant = *variant;
    auto property = property_kind_from_name(j.at("property").get<std::string>());
    if (!property) throw FormatError("unknown property kind");
    c.property = *property;
    c.num_classes = j.at("num_classes").get<int>();
    c.class_codes = j.at("class_codes").get<std::vector<std::string>>();
    c.input_frames = j.value("input_frames", 150);
    c.input_joints = j.value("input_joints", 27);
    c.input_channels = j.value("input_channels", 3);
    c.dropout = j.value("dropout", 0.0);
    c.layers = j.value("layers", 2);
    c.hidden_dim = j.value("hidden_dim", 64);
    c.cell = j.value("cell", "gru") == std::string("lstm") ? RnnCell::Lstm : RnnCell::Gru;
    c.blocks = j.value("blocks", 2);
    c.channels = j.value("channels", 16);
    c.temporal_kernel = j.value("temporal_kernel", 9);
    c.temporal_stride = j.value("temporal_stride", 2);
    c.groups = j.value("groups", 1);
    return c;
}

} // namespace

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
    json header;
    header["config"] = config_to_json(model.config);
    header["provenance"] = {{"seed", model.provenance.seed},
                            {"split_hash", model.provenance.split_hash},
                            {"epochs", model.provenance.epochs}};
    header["majority_class"] = model.majority_class;
    json manifest = json::array();
    for (const auto& [name, tensor] : model.params.items)
        manifest.push_back({{"name", name}, {"shape", tensor.shape}});
    header["params"] = manifest;
    std::string head = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out.write(kMagic, 8);
    put_u64(out, head.size());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, tensor] : model.params.items)
        for (double value : tensor.v)
            put_u64(out, std::bit_cast<std::uint64_t>(value));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(path.string() + ": not a checkpoint");
    std::uint64_t head_len = get_u64(in);
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    if (static_cast<std::uint64_t>(in.gcount()) != head_len)
        throw FormatError("truncated checkpoint header");
    json header = json::parse(head);

    TrainedModel model;
    model.config = config_from_json(header.at("config"));
    model.provenance.seed = header.at("provenance").at("seed").get<std::uint64_t>();
    model.provenance.split_hash = header.at("provenance").at("split_hash").get<std::string>();
    model.provenance.epochs = header.at("provenance").at("epochs").get<int>();
    model.majority_class = header.at("majority_class").get<int>();
    for (const auto& entry : header.at("params")) {
        std::string name = entry.at("name").get<std::string>();
        auto shape = entry.at("shape").get<std::vector<long long>>();
        ad::Tensor tensor = ad::Tensor::zeros(shape);
        for (double& value : tensor.v) value = std::bit_cast<double>(get_u64(in));
        model.params.add(std::move(name), std::move(tensor));
    }
    return model;
}

} // namespace ppr
