#ifndef PPR_AUTODIFF_HPP
#define PPR_AUTODIFF_HPP

#include <functional>
#include <string>
#include <vector>

#include "ppr/error.hpp"
#include "ppr/rng.hpp"

namespace ppr::ad {

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch", what) {}
};

class UnnormalizedAdjacency : public Error {
public:
    explicit UnnormalizedAdjacency(const std::string& what)
        : Error("UnnormalizedAdjacency", what) {}
};

class IndexOutOfRange : public Error {
public:
    explicit IndexOutOfRange(const std::string& what) : Error("IndexOutOfRange", what) {}
};

class NonFiniteTensor : public Error {
public:
    explicit NonFiniteTensor(const std::string& what) : Error("NonFiniteTensor", what) {}
};

/// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<long long> shape;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::vector<long long> s, std::vector<double> values)
        : shape(std::move(s)), v(std::move(values)) {}

    static Tensor zeros(std::vector<long long> shape);
    static Tensor full(std::vector<long long> shape, double value);
    static Tensor scalar(double value) { return Tensor({1}, {value}); }

    long long numel() const;
    int rank() const { return static_cast<int>(shape.size()); }
    long long dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

struct Var {
    int id = -1;
};

/// Reverse-mode tape. Node creation order is the topological order; backward
/// walks it in reverse. One tape per training step, not shared across threads.
class Tape {
public:
    Var input(Tensor value);
    Var constant(Tensor value) { return input(std::move(value)); }

    const Tensor& val(Var x) const { return nodes_[static_cast<std::size_t>(x.id)].value; }
    const Tensor& grad(Var x) const { return nodes_[static_cast<std::size_t>(x.id)].grad; }

    /// Seeds d(loss)/d(loss)=1 and accumulates gradients for every node.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

    // op plumbing
    using Pull = std::function<void(Tape&, int)>;
    Var make(Tensor value, Pull pull);
    Tensor& grad_buf(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Pull pull;
    };
    std::vector<Node> nodes_;
};

// elementwise
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var relu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var tanh_op(Tape& t, Var a);

/// One minus x, used by gate blending.
Var one_minus(Tape& t, Var a);

// structure
Var reshape(Tape& t, Var a, std::vector<long long> shape);
Var slice_cols(Tape& t, Var a, long long from, long long to); // on [B,D]
Var sum(Tape& t, Var a);                                      // scalar

// linear algebra
Var matmul(Tape& t, Var a, Var b);          // [m,k] x [k,n]
Var linear(Tape& t, Var x, Var w, Var b);   // [B,D] x [D,H] + b[H]

/// a_norm * x * w with row-normalized adjacency. x: [N,Fin], a: [N,N],
/// w: [Fin,Fout].
Var graph_conv(Tape& t, Var x, const Tensor& a_norm, Var w);

/// Batched form over [B,T,J,F]: the same joint mixing applied at every frame.
Var spatial_graph_conv(Tape& t, Var x, const Tensor& a_norm, Var w);

/// Per-feature 1-D convolution along time. x: [T,F], kernel: [K,F] or [K,1]
/// (shared across features). T' = floor((T + 2*pad - K)/stride) + 1.
Var temporal_conv(Tape& t, Var x, Var kernel, int stride, int pad);

/// Batched form over [B,T,J,F], per joint and per feature.
Var temporal_conv_btjf(Tape& t, Var x, Var kernel, int stride, int pad);

/// Picks frames 0, stride, 2*stride, ... ; pairs with same-padded strided
/// temporal convolutions on the residual path.
Var subsample_time(Tape& t, Var x, int stride);

/// Channel map on [B,T,J,F] x [F,F'].
Var feature_map(Tape& t, Var x, Var w);

/// Mean over time and joints: [B,T,J,F] -> [B,F].
Var mean_pool_tj(Tape& t, Var x);

/// Inverted dropout with a caller-owned deterministic mask stream. Call only
/// in training mode; evaluation simply skips the op.
Var dropout(Tape& t, Var a, double rate, Rng& rng);

struct CrossEntropyResult {
    Var loss;            // scalar
    Tensor probabilities; // [B,K]
};

/// Mean negative log-likelihood of the target classes; optional per-class
/// weights turn the mean into a weighted mean.
CrossEntropyResult softmax_cross_entropy(Tape& t, Var logits,
                                         const std::vector<int>& targets,
                                         const std::vector<double>& class_weights = {});

// recurrent cells, composed from the primitives above
struct GruParams {
    Var wx; // [D, 3H] columns: reset | update | candidate
    Var wh; // [H, 3H]
    Var bx; // [3H]
    Var bh; // [3H]
};
Var gru_step(Tape& t, Var x_t, Var h_prev, const GruParams& p);

struct LstmParams {
    Var wx; // [D, 4H] columns: input | forget | cell | output
    Var wh; // [H, 4H]
    Var bx; // [4H]
    Var bh; // [4H]
};
struct LstmState {
    Var h;
    Var c;
};
LstmState lstm_step(Tape& t, Var x_t, LstmState prev, const LstmParams& p);

/// Max relative error between reverse-mode and central-difference gradients,
/// |g - g_fd| / max(1e-8, |g| + |g_fd|), over every element of every input.
/// f must return a scalar Var built on the given tape.
double gradcheck(const std::function<Var(Tape&, const std::vector<Var>&)>& f,
                 const std::vector<Tensor>& inputs, double eps = 1e-5);

} // namespace ppr::ad

#endif
