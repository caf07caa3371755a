#include "ppr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppr::ad {

Tensor Tensor::zeros(std::vector<long long> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.v.assign(static_cast<std::size_t>(t.numel()), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<long long> shape, double value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.v.begin(), t.v.end(), value);
    return t;
}

long long Tensor::numel() const {
    long long n = 1;
    for (long long d : shape) n *= d;
    return n;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

namespace {

void check_finite(const Tensor& t, const char* op) {
    for (double x : t.v)
        if (!std::isfinite(x)) throw NonFiniteTensor(op);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeMismatch(what);
}

} // namespace

Var Tape::input(Tensor value) {
    check_finite(value, "input");
    Node node;
    node.grad = Tensor::zeros(value.shape);
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make(Tensor value, Pull pull) {
    Node node;
    node.grad = Tensor::zeros(value.shape);
    node.value = std::move(value);
    node.pull = std::move(pull);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var loss) {
    require(val(loss).numel() == 1, "backward requires a scalar loss");
    for (auto& node : nodes_) std::fill(node.grad.v.begin(), node.grad.v.end(), 0.0);
    nodes_[static_cast<std::size_t>(loss.id)].grad.v[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        auto& node = nodes_[static_cast<std::size_t>(id)];
        if (node.pull) node.pull(*this, id);
    }
}

// ---- elementwise -----------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Var unary_op(Tape& t, Var a, const char* name, Fwd fwd, Bwd bwd) {
    const Tensor& x = t.val(a);
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = fwd(x.v[i]);
    check_finite(out, name);
    return t.make(std::move(out), [a, bwd](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        const Tensor& x = tape.val(a);
        const Tensor& y = tape.val(Var{self});
        Tensor& ga = tape.grad_buf(a.id);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * bwd(x.v[i], y.v[i]);
    });
}

} // namespace

Var add(Tape& t, Var a, Var b) {
    require(t.val(a).same_shape(t.val(b)), "add " + t.val(a).shape_str() + " vs " + t.val(b).shape_str());
    const Tensor& x = t.val(a);
    const Tensor& y = t.val(b);
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = x.v[i] + y.v[i];
    check_finite(out, "add");
    return t.make(std::move(out), [a, b](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        Tensor& ga = tape.grad_buf(a.id);
        Tensor& gb = tape.grad_buf(b.id);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            ga.v[i] += g.v[i];
            gb.v[i] += g.v[i];
        }
    });
}

Var sub(Tape& t, Var a, Var b) {
    require(t.val(a).same_shape(t.val(b)), "sub shapes differ");
    const Tensor& x = t.val(a);
    const Tensor& y = t.val(b);
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = x.v[i] - y.v[i];
    check_finite(out, "sub");
    return t.make(std::move(out), [a, b](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        Tensor& ga = tape.grad_buf(a.id);
        Tensor& gb = tape.grad_buf(b.id);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            ga.v[i] += g.v[i];
            gb.v[i] -= g.v[i];
        }
    });
}

Var mul(Tape& t, Var a, Var b) {
    require(t.val(a).same_shape(t.val(b)), "mul shapes differ");
    const Tensor& x = t.val(a);
    const Tensor& y = t.val(b);
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = x.v[i] * y.v[i];
    check_finite(out, "mul");
    return t.make(std::move(out), [a, b](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        const Tensor& x = tape.val(a);
        const Tensor& y = tape.val(b);
        Tensor& ga = tape.grad_buf(a.id);
        Tensor& gb = tape.grad_buf(b.id);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            ga.v[i] += g.v[i] * y.v[i];
            gb.v[i] += g.v[i] * x.v[i];
        }
    });
}

Var scale(Tape& t, Var a, double c) {
    return unary_op(t, a, "scale", [c](double x) { return c * x; },
                    [c](double, double) { return c; });
}

Var relu(Tape& t, Var a) {
    return unary_op(t, a, "relu", [](double x) { return x > 0 ? x : 0.0; },
                    [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& t, Var a) {
    return unary_op(t, a, "sigmoid",
                    [](double x) {
                        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                      : std::exp(x) / (1.0 + std::exp(x));
                    },
                    [](double, double y) { return y * (1.0 - y); });
}

Var tanh_op(Tape& t, Var a) {
    return unary_op(t, a, "tanh", [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Var one_minus(Tape& t, Var a) {
    return unary_op(t, a, "one_minus", [](double x) { return 1.0 - x; },
                    [](double, double) { return -1.0; });
}

// ---- structure --------------------------------------------------------------

Var reshape(Tape& t, Var a, std::vector<long long> shape) {
    Tensor out(shape, t.val(a).v);
    require(out.numel() == t.val(a).numel(), "reshape numel mismatch");
    return t.make(std::move(out), [a](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        Tensor& ga = tape.grad_buf(a.id);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
    });
}

Var slice_cols(Tape& t, Var a, long long from, long long to) {
    const Tensor& x = t.val(a);
    require(x.rank() == 2, "slice_cols wants a matrix");
    require(0 <= from && from < to && to <= x.dim(1), "slice_cols range");
    long long rows = x.dim(0), cols = x.dim(1), width = to - from;
    Tensor out = Tensor::zeros({rows, width});
    for (long long r = 0; r < rows; ++r)
        for (long long c = 0; c < width; ++c)
            out.v[static_cast<std::size_t>(r * width + c)] =
                x.v[static_cast<std::size_t>(r * cols + from + c)];
    return t.make(std::move(out), [a, from, width, cols](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        Tensor& ga = tape.grad_buf(a.id);
        long long rows = g.dim(0);
        for (long long r = 0; r < rows; ++r)
            for (long long c = 0; c < width; ++c)
                ga.v[static_cast<std::size_t>(r * cols + from + c)] +=
                    g.v[static_cast<std::size_t>(r * width + c)];
    });
}

Var sum(Tape& t, Var a) {
    const Tensor& x = t.val(a);
    double total = 0;
    for (double value : x.v) total += value;
    Tensor out = Tensor::scalar(total);
    check_finite(out, "sum");
    return t.make(std::move(out), [a](Tape& tape, int self) {
        double g = tape.grad_buf(self).v[0];
        Tensor& ga = tape.grad_buf(a.id);
        for (double& value : ga.v) value += g;
    });
}

// ---- linear algebra ---------------------------------------------------------

Var matmul(Tape& t, Var a, Var b) {
    const Tensor& x = t.val(a);
    const Tensor& y = t.val(b);
    require(x.rank() == 2 && y.rank() == 2, "matmul wants matrices");
    require(x.dim(1) == y.dim(0),
            "matmul " + x.shape_str() + " x " + y.shape_str());
    long long m = x.dim(0), k = x.dim(1), n = y.dim(1);
    Tensor out = Tensor::zeros({m, n});
    for (long long i = 0; i < m; ++i)
        for (long long p = 0; p < k; ++p) {
            double xv = x.v[static_cast<std::size_t>(i * k + p)];
            if (xv == 0) continue;
            const double* yrow = &y.v[static_cast<std::size_t>(p * n)];
            double* orow = &out.v[static_cast<std::size_t>(i * n)];
            for (long long j = 0; j < n; ++j) orow[j] += xv * yrow[j];
        }
    check_finite(out, "matmul");
    return t.make(std::move(out), [a, b, m, k, n](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        const Tensor& x = tape.val(a);
        const Tensor& y = tape.val(b);
        Tensor& ga = tape.grad_buf(a.id);
        Tensor& gb = tape.grad_buf(b.id);
        // dA = dC * B^T
        for (long long i = 0; i < m; ++i)
            for (long long j = 0; j < n; ++j) {
                double gv = g.v[static_cast<std::size_t>(i * n + j)];
                if (gv == 0) continue;
                for (long long p = 0; p < k; ++p)
                    ga.v[static_cast<std::size_t>(i * k + p)] +=
                        gv * y.v[static_cast<std::size_t>(p * n + j)];
            }
        // dB = A^T * dC
        for (long long i = 0; i < m; ++i)
            for (long long p = 0; p < k; ++p) {
                double xv = x.v[static_cast<std::size_t>(i * k + p)];
                if (xv == 0) continue;
                for (long long j = 0; j < n; ++j)
                    gb.v[static_cast<std::size_t>(p * n + j)] +=
                        xv * g.v[static_cast<std::size_t>(i * n + j)];
            }
    });
}

Var linear(Tape& t, Var x, Var w, Var b) {
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    const Tensor& bv = t.val(b);
    require(xv.rank() == 2 && wv.rank() == 2 && bv.rank() == 1, "linear shapes");
    require(xv.dim(1) == wv.dim(0) && wv.dim(1) == bv.dim(0),
            "linear " + xv.shape_str() + " x " + wv.shape_str());
    long long rows = xv.dim(0), din = xv.dim(1), dout = wv.dim(1);
    Tensor out = Tensor::zeros({rows, dout});
    for (long long i = 0; i < rows; ++i) {
        double* orow = &out.v[static_cast<std::size_t>(i * dout)];
        for (long long j = 0; j < dout; ++j) orow[j] = bv.v[static_cast<std::size_t>(j)];
        for (long long p = 0; p < din; ++p) {
            double x0 = xv.v[static_cast<std::size_t>(i * din + p)];
            if (x0 == 0) continue;
            const double* wrow = &wv.v[static_cast<std::size_t>(p * dout)];
            for (long long j = 0; j < dout; ++j) orow[j] += x0 * wrow[j];
        }
    }
    check_finite(out, "linear");
    return t.make(std::move(out), [x, w, b, rows, din, dout](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        const Tensor& xv = tape.val(x);
        const Tensor& wv = tape.val(w);
        Tensor& gx = tape.grad_buf(x.id);
        Tensor& gw = tape.grad_buf(w.id);
        Tensor& gb = tape.grad_buf(b.id);
        for (long long i = 0; i < rows; ++i)
            for (long long j = 0; j < dout; ++j) {
                double gv = g.v[static_cast<std::size_t>(i * dout + j)];
                if (gv == 0) continue;
                gb.v[static_cast<std::size_t>(j)] += gv;
                for (long long p = 0; p < din; ++p) {
                    gx.v[static_cast<std::size_t>(i * din + p)] +=
                        gv * wv.v[static_cast<std::size_t>(p * dout + j)];
                    gw.v[static_cast<std::size_t>(p * dout + j)] +=
                        gv * xv.v[static_cast<std::size_t>(i * din + p)];
                }
            }
    });
}

// ---- graph ops ---------------------------------------------------------------

namespace {

void check_adjacency(const Tensor& a, long long joints) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1))
        throw ShapeMismatch("adjacency must be square, got " + a.shape_str());
    if (a.dim(0) != joints)
        throw ShapeMismatch("adjacency is " + a.shape_str() + " but data has " +
                            std::to_string(joints) + " joints");
    long long n = a.dim(0);
    for (long long i = 0; i < n; ++i) {
        double row = 0;
        for (long long j = 0; j < n; ++j) row += a.v[static_cast<std::size_t>(i * n + j)];
        if (std::abs(row - 1.0) > 1e-9)
            throw UnnormalizedAdjacency("row " + std::to_string(i) + " sums to " +
                                        std::to_string(row));
    }
}

} // namespace

Var spatial_graph_conv(Tape& t, Var x, const Tensor& a_norm, Var w) {
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    require(xv.rank() == 4, "spatial_graph_conv wants [B,T,J,F]");
    require(wv.rank() == 2 && wv.dim(0) == xv.dim(3), "spatial_graph_conv weight");
    check_adjacency(a_norm, xv.dim(2));
    long long B = xv.dim(0), T = xv.dim(1), J = xv.dim(2), F = xv.dim(3), Fo = wv.dim(1);

    // xw = x * w, then out = a * xw, per (b, t)
    Tensor xw = Tensor::zeros({B, T, J, Fo});
    for (long long bt = 0; bt < B * T; ++bt) {
        const double* xm = &xv.v[static_cast<std::size_t>(bt * J * F)];
        double* om = &xw.v[static_cast<std::size_t>(bt * J * Fo)];
        for (long long j = 0; j < J; ++j)
            for (long long p = 0; p < F; ++p) {
                double x0 = xm[j * F + p];
                if (x0 == 0) continue;
                const double* wrow = &wv.v[static_cast<std::size_t>(p * Fo)];
                for (long long q = 0; q < Fo; ++q) om[j * Fo + q] += x0 * wrow[q];
            }
    }
    Tensor out = Tensor::zeros({B, T, J, Fo});
    for (long long bt = 0; bt < B * T; ++bt) {
        const double* xm = &xw.v[static_cast<std::size_t>(bt * J * Fo)];
        double* om = &out.v[static_cast<std::size_t>(bt * J * Fo)];
        for (long long i = 0; i < J; ++i)
            for (long long j = 0; j < J; ++j) {
                double a0 = a_norm.v[static_cast<std::size_t>(i * J + j)];
                if (a0 == 0) continue;
                for (long long q = 0; q < Fo; ++q) om[i * Fo + q] += a0 * xm[j * Fo + q];
            }
    }
    check_finite(out, "spatial_graph_conv");
    Tensor a_copy = a_norm;
    return t.make(std::move(out),
                  [x, w, a = std::move(a_copy), B, T, J, F, Fo](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        const Tensor& xv = tape.val(x);
        const Tensor& wv = tape.val(w);
        Tensor& gx = tape.grad_buf(x.id);
        Tensor& gw = tape.grad_buf(w.id);
        // d(xw) = a^T * g  (a is constant data)
        Tensor gxw = Tensor::zeros({B, T, J, Fo});
        for (long long bt = 0; bt < B * T; ++bt) {
            const double* gm = &g.v[static_cast<std::size_t>(bt * J * Fo)];
            double* om = &gxw.v[static_cast<std::size_t>(bt * J * Fo)];
            for (long long i = 0; i < J; ++i)
                for (long long j = 0; j < J; ++j) {
                    double a0 = a.v[static_cast<std::size_t>(i * J + j)];
                    if (a0 == 0) continue;
                    for (long long q = 0; q < Fo; ++q) om[j * Fo + q] += a0 * gm[i * Fo + q];
                }
        }
        for (long long bt = 0; bt < B * T; ++bt) {
            const double* gm = &gxw.v[static_cast<std::size_t>(bt * J * Fo)];
            const double* xm = &xv.v[static_cast<std::size_t>(bt * J * F)];
            double* gxm = &gx.v[static_cast<std::size_t>(bt * J * F)];
            for (long long j = 0; j < J; ++j)
                for (long long p = 0; p < F; ++p) {
                    const double* wrow = &wv.v[static_cast<std::size_t>(p * Fo)];
                    double acc = 0;
                    for (long long q = 0; q < Fo; ++q) acc += gm[j * Fo + q] * wrow[q];
                    gxm[j * F + p] += acc;
                    double x0 = xm[j * F + p];
                    if (x0 != 0)
                        for (long long q = 0; q < Fo; ++q)
                            gw.v[static_cast<std::size_t>(p * Fo + q)] += x0 * gm[j * Fo + q];
                }
        }
    });
}

Var graph_conv(Tape& t, Var x, const Tensor& a_norm, Var w) {
    const Tensor& xv = t.val(x);
    require(xv.rank() == 2, "graph_conv wants [N,F]");
    Var x4 = reshape(t, x, {1, 1, xv.dim(0), xv.dim(1)});
    Var y4 = spatial_graph_conv(t, x4, a_norm, w);
    const Tensor& yv = t.val(y4);
    return reshape(t, y4, {yv.dim(2), yv.dim(3)});
}

Var temporal_conv_btjf(Tape& t, Var x, Var kernel, int stride, int pad) {
    const Tensor& xv = t.val(x);
    const Tensor& kv = t.val(kernel);
    require(xv.rank() == 4, "temporal_conv wants [B,T,J,F]");
    require(kv.rank() == 2, "kernel wants [K,F] or [K,1]");
    require(stride >= 1 && pad >= 0, "bad stride/pad");
    long long B = xv.dim(0), T = xv.dim(1), J = xv.dim(2), F = xv.dim(3);
    long long K = kv.dim(0), KF = kv.dim(1);
    require(KF == F || KF == 1, "kernel feature dim must be F or 1");
    require(T + 2 * pad >= K, "kernel longer than padded input");
    long long To = (T + 2 * pad - K) / stride + 1;

    Tensor out = Tensor::zeros({B, To, J, F});
    for (long long b = 0; b < B; ++b)
        for (long long to = 0; to < To; ++to)
            for (long long k = 0; k < K; ++k) {
                long long ti = to * stride + k - pad;
                if (ti < 0 || ti >= T) continue;
                const double* xrow = &xv.v[static_cast<std::size_t>(((b * T + ti) * J) * F)];
                double* orow = &out.v[static_cast<std::size_t>(((b * To + to) * J) * F)];
                const double* krow = &kv.v[static_cast<std::size_t>(k * KF)];
                for (long long j = 0; j < J; ++j)
                    for (long long f = 0; f < F; ++f)
                        orow[j * F + f] += xrow[j * F + f] * krow[KF == 1 ? 0 : f];
            }
    check_finite(out, "temporal_conv");
    return t.make(std::move(out),
                  [x, kernel, B, T, J, F, K, KF, To, stride, pad](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        const Tensor& xv = tape.val(x);
        const Tensor& kv = tape.val(kernel);
        Tensor& gx = tape.grad_buf(x.id);
        Tensor& gk = tape.grad_buf(kernel.id);
        for (long long b = 0; b < B; ++b)
            for (long long to = 0; to < To; ++to)
                for (long long k = 0; k < K; ++k) {
                    long long ti = to * stride + k - pad;
                    if (ti < 0 || ti >= T) continue;
                    const double* grow = &g.v[static_cast<std::size_t>(((b * To + to) * J) * F)];
                    const double* xrow = &xv.v[static_cast<std::size_t>(((b * T + ti) * J) * F)];
                    double* gxrow = &gx.v[static_cast<std::size_t>(((b * T + ti) * J) * F)];
                    const double* krow = &kv.v[static_cast<std::size_t>(k * KF)];
                    double* gkrow = &gk.v[static_cast<std::size_t>(k * KF)];
                    for (long long j = 0; j < J; ++j)
                        for (long long f = 0; f < F; ++f) {
                            long long fi = KF == 1 ? 0 : f;
                            gxrow[j * F + f] += grow[j * F + f] * krow[fi];
                            gkrow[fi] += grow[j * F + f] * xrow[j * F + f];
                        }
                }
    });
}

Var temporal_conv(Tape& t, Var x, Var kernel, int stride, int pad) {
    const Tensor& xv = t.val(x);
    require(xv.rank() == 2, "temporal_conv wants [T,F]");
    Var x4 = reshape(t, x, {1, xv.dim(0), 1, xv.dim(1)});
    Var y4 = temporal_conv_btjf(t, x4, kernel, stride, pad);
    const Tensor& yv = t.val(y4);
    return reshape(t, y4, {yv.dim(1), yv.dim(3)});
}

Var subsample_time(Tape& t, Var x, int stride) {
    const Tensor& xv = t.val(x);
    require(xv.rank() == 4, "subsample_time wants [B,T,J,F]");
    require(stride >= 1, "bad stride");
    long long B = xv.dim(0), T = xv.dim(1), J = xv.dim(2), F = xv.dim(3);
    long long To = (T - 1) / stride + 1;
    Tensor out = Tensor::zeros({B, To, J, F});
    for (long long b = 0; b < B; ++b)
        for (long long to = 0; to < To; ++to)
            std::copy_n(&xv.v[static_cast<std::size_t>(((b * T + to * stride) * J) * F)],
                        static_cast<std::size_t>(J * F),
                        &out.v[static_cast<std::size_t>(((b * To + to) * J) * F)]);
    return t.make(std::move(out), [x, B, T, J, F, To, stride](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        Tensor& gx = tape.grad_buf(x.id);
        for (long long b = 0; b < B; ++b)
            for (long long to = 0; to < To; ++to) {
                const double* grow = &g.v[static_cast<std::size_t>(((b * To + to) * J) * F)];
                double* gxrow =
                    &gx.v[static_cast<std::size_t>(((b * T + to * stride) * J) * F)];
                for (long long i = 0; i < J * F; ++i) gxrow[i] += grow[i];
            }
    });
}

Var feature_map(Tape& t, Var x, Var w) {
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    require(xv.rank() == 4 && wv.rank() == 2 && wv.dim(0) == xv.dim(3), "feature_map shapes");
    long long rows = xv.dim(0) * xv.dim(1) * xv.dim(2);
    Var flat = reshape(t, x, {rows, xv.dim(3)});
    Var mapped = matmul(t, flat, w);
    return reshape(t, mapped, {xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(1)});
}

Var mean_pool_tj(Tape& t, Var x) {
    const Tensor& xv = t.val(x);
    require(xv.rank() == 4, "mean_pool_tj wants [B,T,J,F]");
    long long B = xv.dim(0), T = xv.dim(1), J = xv.dim(2), F = xv.dim(3);
    double inv = 1.0 / static_cast<double>(T * J);
    Tensor out = Tensor::zeros({B, F});
    for (long long b = 0; b < B; ++b) {
        double* orow = &out.v[static_cast<std::size_t>(b * F)];
        for (long long tj = 0; tj < T * J; ++tj) {
            const double* xrow = &xv.v[static_cast<std::size_t>((b * T * J + tj) * F)];
            for (long long f = 0; f < F; ++f) orow[f] += xrow[f];
        }
        for (long long f = 0; f < F; ++f) orow[f] *= inv;
    }
    check_finite(out, "mean_pool_tj");
    return t.make(std::move(out), [x, B, T, J, F, inv](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        Tensor& gx = tape.grad_buf(x.id);
        for (long long b = 0; b < B; ++b) {
            const double* grow = &g.v[static_cast<std::size_t>(b * F)];
            for (long long tj = 0; tj < T * J; ++tj) {
                double* gxrow = &gx.v[static_cast<std::size_t>((b * T * J + tj) * F)];
                for (long long f = 0; f < F; ++f) gxrow[f] += grow[f] * inv;
            }
        }
    });
}

Var dropout(Tape& t, Var a, double rate, Rng& rng) {
    require(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0,1)");
    const Tensor& x = t.val(a);
    Tensor mask = Tensor::zeros(x.shape);
    double keep = 1.0 - rate;
    for (double& m : mask.v) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    Tensor out = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = x.v[i] * mask.v[i];
    return t.make(std::move(out), [a, mask = std::move(mask)](Tape& tape, int self) {
        const Tensor& g = tape.grad_buf(self);
        Tensor& ga = tape.grad_buf(a.id);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * mask.v[i];
    });
}

CrossEntropyResult softmax_cross_entropy(Tape& t, Var logits,
                                         const std::vector<int>& targets,
                                         const std::vector<double>& class_weights) {
    const Tensor& z = t.val(logits);
    require(z.rank() == 2, "softmax_cross_entropy wants [B,K]");
    long long B = z.dim(0), K = z.dim(1);
    require(B == static_cast<long long>(targets.size()), "target count != batch size");
    if (!class_weights.empty())
        require(static_cast<long long>(class_weights.size()) == K, "weight count != classes");
    for (int y : targets)
        if (y < 0 || y >= K)
            throw IndexOutOfRange("target " + std::to_string(y) + " with K=" +
                                  std::to_string(K));

    Tensor probs = Tensor::zeros({B, K});
    double loss = 0, weight_total = 0;
    std::vector<double> row_weight(static_cast<std::size_t>(B), 1.0);
    for (long long i = 0; i < B; ++i) {
        const double* zrow = &z.v[static_cast<std::size_t>(i * K)];
        double* prow = &probs.v[static_cast<std::size_t>(i * K)];
        double zmax = zrow[0];
        for (long long k = 1; k < K; ++k) zmax = std::max(zmax, zrow[k]);
        double denom = 0;
        for (long long k = 0; k < K; ++k) {
            prow[k] = std::exp(zrow[k] - zmax);
            denom += prow[k];
        }
        for (long long k = 0; k < K; ++k) prow[k] /= denom;
        double w = class_weights.empty()
                       ? 1.0
                       : class_weights[static_cast<std::size_t>(targets[static_cast<std::size_t>(i)])];
        row_weight[static_cast<std::size_t>(i)] = w;
        weight_total += w;
        double p = std::max(prow[targets[static_cast<std::size_t>(i)]], 1e-300);
        loss -= w * std::log(p);
    }
    require(weight_total > 0, "all rows have zero weight");
    loss /= weight_total;

    Tensor loss_t = Tensor::scalar(loss);
    check_finite(loss_t, "softmax_cross_entropy");
    Tensor probs_copy = probs;
    Var loss_var = t.make(
        std::move(loss_t),
        [logits, targets, row_weight, weight_total, probs = std::move(probs_copy), B,
         K](Tape& tape, int self) {
            double g = tape.grad_buf(self).v[0];
            Tensor& gz = tape.grad_buf(logits.id);
            for (long long i = 0; i < B; ++i) {
                double w = row_weight[static_cast<std::size_t>(i)] / weight_total;
                const double* prow = &probs.v[static_cast<std::size_t>(i * K)];
                double* grow = &gz.v[static_cast<std::size_t>(i * K)];
                for (long long k = 0; k < K; ++k) {
                    double delta = k == targets[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
                    grow[k] += g * w * (prow[k] - delta);
                }
            }
        });
    return {loss_var, std::move(probs)};
}

// ---- recurrent cells ----------------------------------------------------------

Var gru_step(Tape& t, Var x_t, Var h_prev, const GruParams& p) {
    long long H = t.val(h_prev).dim(1);
    require(t.val(p.wx).dim(1) == 3 * H && t.val(p.wh).dim(1) == 3 * H, "gru gate width");
    Var gx = linear(t, x_t, p.wx, p.bx);   // [B,3H]
    Var gh = linear(t, h_prev, p.wh, p.bh); // [B,3H]
    Var r = sigmoid(t, add(t, slice_cols(t, gx, 0, H), slice_cols(t, gh, 0, H)));
    Var z = sigmoid(t, add(t, slice_cols(t, gx, H, 2 * H), slice_cols(t, gh, H, 2 * H)));
    Var n = tanh_op(t, add(t, slice_cols(t, gx, 2 * H, 3 * H),
                           mul(t, r, slice_cols(t, gh, 2 * H, 3 * H))));
    // h' = (1-z) * n + z * h
    return add(t, mul(t, one_minus(t, z), n), mul(t, z, h_prev));
}

LstmState lstm_step(Tape& t, Var x_t, LstmState prev, const LstmParams& p) {
    long long H = t.val(prev.h).dim(1);
    require(t.val(p.wx).dim(1) == 4 * H && t.val(p.wh).dim(1) == 4 * H, "lstm gate width");
    Var gates = add(t, linear(t, x_t, p.wx, p.bx), linear(t, prev.h, p.wh, p.bh));
    Var i = sigmoid(t, slice_cols(t, gates, 0, H));
    Var f = sigmoid(t, slice_cols(t, gates, H, 2 * H));
    Var g = tanh_op(t, slice_cols(t, gates, 2 * H, 3 * H));
    Var o = sigmoid(t, slice_cols(t, gates, 3 * H, 4 * H));
    Var c = add(t, mul(t, f, prev.c), mul(t, i, g));
    Var h = mul(t, o, tanh_op(t, c));
    return {h, c};
}

// ---- gradcheck -----------------------------------------------------------------

double gradcheck(const std::function<Var(Tape&, const std::vector<Var>&)>& f,
                 const std::vector<Tensor>& inputs, double eps) {
    auto evaluate = [&](const std::vector<Tensor>& points) {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(points.size());
        for (const auto& p : points) vars.push_back(tape.input(p));
        Var loss = f(tape, vars);
        return tape.val(loss).v[0];
    };

    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& p : inputs) vars.push_back(tape.input(p));
    Var loss = f(tape, vars);
    tape.backward(loss);
    std::vector<Tensor> analytic;
    analytic.reserve(vars.size());
    for (Var v : vars) analytic.push_back(tape.grad(v));

    double worst = 0;
    std::vector<Tensor> probe = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t e = 0; e < inputs[i].v.size(); ++e) {
            double orig = probe[i].v[e];
            probe[i].v[e] = orig + eps;
            double up = evaluate(probe);
            probe[i].v[e] = orig - eps;
            double down = evaluate(probe);
            probe[i].v[e] = orig;
            double fd = (up - down) / (2 * eps);
            double g = analytic[i].v[e];
            double rel = std::abs(g - fd) / std::max(1e-8, std::abs(g) + std::abs(fd));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

} // namespace ppr::ad
