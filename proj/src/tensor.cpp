#include "spottune/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace spottune {

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
    }
}

Tensor Tensor::row(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> d) {
    return Tensor(Shape{rows, cols}, std::move(d));
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    }
}

// Decomposes a shape into (outer, axis extent, inner) strides around `axis`.
struct AxisView {
    std::size_t outer = 1, extent = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
    v.extent = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

}  // namespace

Tape::Node& Tape::node_at(int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw Error("tape: invalid node id " + std::to_string(id));
    }
    return nodes_[static_cast<std::size_t>(id)];
}

const Tape::Node& Tape::node_at(int id) const {
    return const_cast<Tape*>(this)->node_at(id);
}

bool Tape::any_requires_grad(const std::vector<int>& ids) const {
    for (int id : ids) {
        if (node_at(id).requires_grad) return true;
    }
    return false;
}

int Tape::push(const char* op, Tensor value, std::vector<int> inputs, BackwardFn backward) {
    const int id = static_cast<int>(nodes_.size());
    if (!value.all_finite()) {
        throw NumericError(std::string(op) + ": non-finite output at node " + std::to_string(id));
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = any_requires_grad(inputs);
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
    n.op = op;
    nodes_.push_back(std::move(n));
    return id;
}

int Tape::leaf(Tensor value, bool requires_grad) {
    const int id = static_cast<int>(nodes_.size());
    if (!value.all_finite()) {
        throw NumericError("leaf: non-finite value at node " + std::to_string(id));
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return id;
}

int Tape::custom(const char* op, Tensor value, std::vector<int> inputs, BackwardFn backward) {
    return push(op, std::move(value), std::move(inputs), std::move(backward));
}

std::span<const double> Tape::grad(int id) const {
    const Node& n = node_at(id);
    if (!n.requires_grad) {
        throw Error("grad: node " + std::to_string(id) + " does not require grad");
    }
    if (!n.grad_ready) {
        throw Error("grad: backward() has not run for node " + std::to_string(id));
    }
    return n.grad;
}

Tensor Tape::grad_tensor(int id) const {
    auto g = grad(id);
    return Tensor(node_at(id).value.shape, std::vector<double>(g.begin(), g.end()));
}

void Tape::accumulate_grad(int id, std::span<const double> delta) {
    Node& n = node_at(id);
    if (!n.requires_grad) return;
    if (delta.size() != n.value.numel()) {
        throw ShapeError("accumulate_grad: got " + std::to_string(delta.size()) +
                         " values for node of size " + std::to_string(n.value.numel()));
    }
    for (std::size_t i = 0; i < delta.size(); ++i) n.grad[i] += delta[i];
}

void Tape::backward(int loss) {
    const Node& loss_node = node_at(loss);
    if (loss_node.value.numel() != 1) {
        throw Error("backward: loss must be scalar, got shape " + shape_str(loss_node.value.shape));
    }
    if (backward_done_) {
        throw Error("backward: already ran on this tape");
    }
    backward_done_ = true;

    // Zero grads for every requires-grad node so non-participating leaves
    // report zeros rather than stale or missing buffers.
    for (Node& n : nodes_) {
        if (n.requires_grad) {
            n.grad.assign(n.value.numel(), 0.0);
            n.grad_ready = true;
        }
    }
    if (!loss_node.requires_grad) return;  // nothing reaches any leaf

    std::vector<char> reachable(nodes_.size(), 0);
    std::vector<int> stack{loss};
    reachable[static_cast<std::size_t>(loss)] = 1;
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        for (int in : nodes_[static_cast<std::size_t>(id)].inputs) {
            if (!reachable[static_cast<std::size_t>(in)]) {
                reachable[static_cast<std::size_t>(in)] = 1;
                stack.push_back(in);
            }
        }
    }

    nodes_[static_cast<std::size_t>(loss)].grad[0] = 1.0;
    for (int id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (reachable[static_cast<std::size_t>(id)] && n.requires_grad && n.backward) {
            n.backward(*this, id);
        }
    }
}

// ---------------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------------

int Tape::add(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape("add", ta, tb);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = ta.data[i] + tb.data[i];
    return push("add", std::move(out), {a, b}, [a, b](Tape& t, int self) {
        auto g = t.grad(self);
        t.accumulate_grad(a, g);
        t.accumulate_grad(b, g);
    });
}

int Tape::sub(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape("sub", ta, tb);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = ta.data[i] - tb.data[i];
    return push("sub", std::move(out), {a, b}, [a, b](Tape& t, int self) {
        auto g = t.grad(self);
        t.accumulate_grad(a, g);
        std::vector<double> neg(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
        t.accumulate_grad(b, neg);
    });
}

int Tape::mul(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape("mul", ta, tb);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = ta.data[i] * tb.data[i];
    return push("mul", std::move(out), {a, b}, [a, b](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& va = t.value(a).data;
        const auto& vb = t.value(b).data;
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * vb[i];
        t.accumulate_grad(a, d);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * va[i];
        t.accumulate_grad(b, d);
    });
}

int Tape::matmul(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0]) {
        throw ShapeError("matmul: shape mismatch " + shape_str(ta.shape) + " vs " +
                         shape_str(tb.shape));
    }
    const std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
    Tensor out(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &ta.data[i * k];
        double* orow = &out.data[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = &tb.data[p * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return push("matmul", std::move(out), {a, b}, [a, b, m, k, n](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& va = t.value(a).data;
        const auto& vb = t.value(b).data;
        if (t.requires_grad(a)) {
            // dA = dC . B^T
            std::vector<double> da(m * k, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double gv = g[i * n + j];
                    for (std::size_t p = 0; p < k; ++p) da[i * k + p] += gv * vb[p * n + j];
                }
            }
            t.accumulate_grad(a, da);
        }
        if (t.requires_grad(b)) {
            // dB = A^T . dC
            std::vector<double> db(k * n, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = va[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) db[p * n + j] += av * g[i * n + j];
                }
            }
            t.accumulate_grad(b, db);
        }
    });
}

int Tape::relu(int a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = ta.data[i] > 0.0 ? ta.data[i] : 0.0;
    return push("relu", std::move(out), {a}, [a](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& va = t.value(a).data;
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = va[i] > 0.0 ? g[i] : 0.0;
        t.accumulate_grad(a, d);
    });
}

int Tape::softmax(int a) {
    const Tensor& ta = value(a);
    if (ta.rank() == 0) throw ShapeError("softmax: needs rank >= 1, got []");
    const AxisView v = axis_view(ta.shape, ta.rank() - 1);
    Tensor out(ta.shape);
    for (std::size_t r = 0; r < v.outer; ++r) {
        const double* in = &ta.data[r * v.extent];
        double* o = &out.data[r * v.extent];
        double mx = in[0];
        for (std::size_t i = 1; i < v.extent; ++i) mx = std::max(mx, in[i]);
        double z = 0.0;
        for (std::size_t i = 0; i < v.extent; ++i) {
            o[i] = std::exp(in[i] - mx);
            z += o[i];
        }
        for (std::size_t i = 0; i < v.extent; ++i) o[i] /= z;
    }
    const std::size_t rows = v.outer, cols = v.extent;
    return push("softmax", std::move(out), {a}, [a, rows, cols](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& y = t.value(self).data;
        std::vector<double> d(g.size());
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = &y[r * cols];
            const double* gr = &g[r * cols];
            double dot = 0.0;
            for (std::size_t i = 0; i < cols; ++i) dot += yr[i] * gr[i];
            for (std::size_t i = 0; i < cols; ++i) d[r * cols + i] = yr[i] * (gr[i] - dot);
        }
        t.accumulate_grad(a, d);
    });
}

int Tape::log(int a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::log(ta.data[i]);
    return push("log", std::move(out), {a}, [a](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& va = t.value(a).data;
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] / va[i];
        t.accumulate_grad(a, d);
    });
}

int Tape::exp(int a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::exp(ta.data[i]);
    return push("exp", std::move(out), {a}, [a](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& y = t.value(self).data;
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * y[i];
        t.accumulate_grad(a, d);
    });
}

int Tape::sum(int a) {
    const Tensor& ta = value(a);
    double s = 0.0;
    for (double x : ta.data) s += x;
    const std::size_t n = ta.numel();
    return push("sum", Tensor::scalar(s), {a}, [a, n](Tape& t, int self) {
        const double g = t.grad(self)[0];
        std::vector<double> d(n, g);
        t.accumulate_grad(a, d);
    });
}

int Tape::mean(int a) {
    const Tensor& ta = value(a);
    if (ta.numel() == 0) throw ShapeError("mean: empty tensor");
    double s = 0.0;
    for (double x : ta.data) s += x;
    const std::size_t n = ta.numel();
    return push("mean", Tensor::scalar(s / static_cast<double>(n)), {a}, [a, n](Tape& t, int self) {
        const double g = t.grad(self)[0] / static_cast<double>(n);
        std::vector<double> d(n, g);
        t.accumulate_grad(a, d);
    });
}

int Tape::scale(int a, double c) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = ta.data[i] * c;
    return push("scale", std::move(out), {a}, [a, c](Tape& t, int self) {
        auto g = t.grad(self);
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * c;
        t.accumulate_grad(a, d);
    });
}

int Tape::concat(const std::vector<int>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Tensor& first = value(parts[0]);
    if (axis >= first.rank()) {
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(first.shape));
    }
    Shape out_shape = first.shape;
    std::size_t total = first.shape[axis];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const Tensor& ti = value(parts[i]);
        Shape expect = ti.shape;
        if (ti.rank() != first.rank() || axis >= ti.rank()) {
            throw ShapeError("concat: rank mismatch " + shape_str(first.shape) + " vs " +
                             shape_str(ti.shape));
        }
        expect[axis] = first.shape[axis];
        if (expect != first.shape) {
            throw ShapeError("concat: shape mismatch " + shape_str(first.shape) + " vs " +
                             shape_str(ti.shape));
        }
        total += ti.shape[axis];
    }
    out_shape[axis] = total;

    const AxisView ov = axis_view(out_shape, axis);
    Tensor out(out_shape);
    std::vector<std::size_t> extents;
    std::size_t off = 0;
    for (int p : parts) {
        const Tensor& tp = value(p);
        const std::size_t ext = tp.shape[axis];
        for (std::size_t r = 0; r < ov.outer; ++r) {
            for (std::size_t e = 0; e < ext; ++e) {
                std::copy_n(&tp.data[(r * ext + e) * ov.inner], ov.inner,
                            &out.data[(r * ov.extent + off + e) * ov.inner]);
            }
        }
        extents.push_back(ext);
        off += ext;
    }
    return push("concat", std::move(out), std::vector<int>(parts),
                [parts, extents, ov](Tape& t, int self) {
                    auto g = t.grad(self);
                    std::size_t off = 0;
                    for (std::size_t i = 0; i < parts.size(); ++i) {
                        const std::size_t ext = extents[i];
                        std::vector<double> d(ov.outer * ext * ov.inner);
                        for (std::size_t r = 0; r < ov.outer; ++r) {
                            for (std::size_t e = 0; e < ext; ++e) {
                                std::copy_n(&g[(r * ov.extent + off + e) * ov.inner], ov.inner,
                                            &d[(r * ext + e) * ov.inner]);
                            }
                        }
                        t.accumulate_grad(parts[i], d);
                        off += ext;
                    }
                });
}

int Tape::slice(int a, std::size_t axis, std::size_t begin, std::size_t end) {
    const Tensor& ta = value(a);
    if (axis >= ta.rank()) {
        throw ShapeError("slice: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(ta.shape));
    }
    if (begin > end || end > ta.shape[axis]) {
        throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for shape " + shape_str(ta.shape));
    }
    const AxisView v = axis_view(ta.shape, axis);
    Shape out_shape = ta.shape;
    out_shape[axis] = end - begin;
    Tensor out(out_shape);
    const std::size_t ext = end - begin;
    for (std::size_t r = 0; r < v.outer; ++r) {
        for (std::size_t e = 0; e < ext; ++e) {
            std::copy_n(&ta.data[(r * v.extent + begin + e) * v.inner], v.inner,
                        &out.data[(r * ext + e) * v.inner]);
        }
    }
    return push("slice", std::move(out), {a}, [a, v, begin, ext](Tape& t, int self) {
        auto g = t.grad(self);
        const std::size_t n = t.value(a).numel();
        std::vector<double> d(n, 0.0);
        for (std::size_t r = 0; r < v.outer; ++r) {
            for (std::size_t e = 0; e < ext; ++e) {
                const double* src = &g[(r * ext + e) * v.inner];
                double* dst = &d[(r * v.extent + begin + e) * v.inner];
                for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
            }
        }
        t.accumulate_grad(a, d);
    });
}

int Tape::stack(const std::vector<int>& scalars) {
    if (scalars.empty()) throw ShapeError("stack: no inputs");
    Tensor out(Shape{scalars.size()});
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        const Tensor& ti = value(scalars[i]);
        if (ti.numel() != 1) {
            throw ShapeError("stack: input " + std::to_string(i) + " has shape " +
                             shape_str(ti.shape) + ", expected a scalar");
        }
        out.data[i] = ti.data[0];
    }
    return push("stack", std::move(out), std::vector<int>(scalars), [scalars](Tape& t, int self) {
        auto g = t.grad(self);
        for (std::size_t i = 0; i < scalars.size(); ++i) {
            const double d[1] = {g[i]};
            t.accumulate_grad(scalars[i], std::span<const double>(d, 1));
        }
    });
}

int Tape::reshape(int a, Shape s) {
    const Tensor& ta = value(a);
    if (shape_numel(s) != ta.numel()) {
        throw ShapeError("reshape: cannot view " + shape_str(ta.shape) + " as " + shape_str(s));
    }
    Tensor out(std::move(s), std::vector<double>(ta.data));
    return push("reshape", std::move(out), {a}, [a](Tape& t, int self) {
        t.accumulate_grad(a, t.grad(self));
    });
}

int Tape::bias_add(int mat, int vec) {
    const Tensor& tm = value(mat);
    const Tensor& tv = value(vec);
    if (tm.rank() != 2 || tv.rank() != 1 || tv.shape[0] != tm.shape[1]) {
        throw ShapeError("bias_add: shape mismatch " + shape_str(tm.shape) + " vs " +
                         shape_str(tv.shape));
    }
    const std::size_t rows = tm.shape[0], cols = tm.shape[1];
    Tensor out(tm.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out.data[r * cols + c] = tm.data[r * cols + c] + tv.data[c];
    }
    return push("bias_add", std::move(out), {mat, vec}, [mat, vec, rows, cols](Tape& t, int self) {
        auto g = t.grad(self);
        t.accumulate_grad(mat, g);
        if (t.requires_grad(vec)) {
            std::vector<double> d(cols, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) d[c] += g[r * cols + c];
            }
            t.accumulate_grad(vec, d);
        }
    });
}

int Tape::scale_rows(int mat, int col) {
    const Tensor& tm = value(mat);
    const Tensor& tc = value(col);
    if (tm.rank() != 2 || tc.numel() != tm.shape[0]) {
        throw ShapeError("scale_rows: shape mismatch " + shape_str(tm.shape) + " vs " +
                         shape_str(tc.shape));
    }
    const std::size_t rows = tm.shape[0], cols = tm.shape[1];
    Tensor out(tm.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const double s = tc.data[r];
        for (std::size_t c = 0; c < cols; ++c) out.data[r * cols + c] = tm.data[r * cols + c] * s;
    }
    return push("scale_rows", std::move(out), {mat, col}, [mat, col, rows, cols](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& vm = t.value(mat).data;
        const auto& vc = t.value(col).data;
        if (t.requires_grad(mat)) {
            std::vector<double> d(rows * cols);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] = g[r * cols + c] * vc[r];
            }
            t.accumulate_grad(mat, d);
        }
        if (t.requires_grad(col)) {
            std::vector<double> d(rows, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) d[r] += g[r * cols + c] * vm[r * cols + c];
            }
            t.accumulate_grad(col, d);
        }
    });
}

int Tape::clamp_min(int a, double floor) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::max(ta.data[i], floor);
    return push("clamp_min", std::move(out), {a}, [a, floor](Tape& t, int self) {
        auto g = t.grad(self);
        const auto& va = t.value(a).data;
        std::vector<double> d(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) d[i] = va[i] > floor ? g[i] : 0.0;
        t.accumulate_grad(a, d);
    });
}

int Tape::cross_entropy(int logits, const std::vector<std::uint32_t>& labels) {
    const Tensor& tl = value(logits);
    if (tl.rank() != 2) {
        throw ShapeError("cross_entropy: logits must be rank 2, got " + shape_str(tl.shape));
    }
    const std::size_t rows = tl.shape[0], cols = tl.shape[1];
    if (labels.size() != rows) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " rows");
    }
    // Log-softmax with max subtraction, fused with the NLL pick.
    std::vector<double> probs(rows * cols);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r] >= cols) {
            throw Error("cross_entropy: label " + std::to_string(labels[r]) + " out of range [0, " +
                        std::to_string(cols) + ") at row " + std::to_string(r));
        }
        const double* in = &tl.data[r * cols];
        double mx = in[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            probs[r * cols + c] = std::exp(in[c] - mx);
            z += probs[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) probs[r * cols + c] /= z;
        loss -= (in[labels[r]] - mx) - std::log(z);
    }
    loss /= static_cast<double>(rows);
    return push("cross_entropy", Tensor::scalar(loss), {logits},
                [logits, labels, probs, rows, cols](Tape& t, int self) {
                    const double g = t.grad(self)[0] / static_cast<double>(rows);
                    std::vector<double> d(rows * cols);
                    for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t c = 0; c < cols; ++c) {
                            const double onehot = (c == labels[r]) ? 1.0 : 0.0;
                            d[r * cols + c] = g * (probs[r * cols + c] - onehot);
                        }
                    }
                    t.accumulate_grad(logits, d);
                });
}

}  // namespace spottune
