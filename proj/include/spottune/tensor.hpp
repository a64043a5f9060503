#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spottune/error.hpp"

namespace spottune {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense n-d value, 64-bit floats, row-major. Rank-0 tensors are scalars.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)) {
        data.assign(shape_numel(shape), fill);
    }
    Tensor(Shape s, std::vector<double> d);

    static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
    static Tensor row(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> d);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    double& operator()(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    bool all_finite() const;
};

// Reverse-mode tape, rebuilt per forward pass. Node ids are creation-ordered,
// so every node's inputs precede it and one reverse sweep is a valid
// topological traversal.
class Tape {
public:
    // Backward hook for ops defined outside this class. Reads grad(self),
    // accumulates into the inputs' grads via accumulate_grad().
    using BackwardFn = std::function<void(Tape&, int self)>;

    int leaf(Tensor value, bool requires_grad = false);
    int constant(Tensor value) { return leaf(std::move(value), false); }

    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int matmul(int a, int b);
    int relu(int a);
    int softmax(int a);  // last axis
    int log(int a);
    int exp(int a);
    int sum(int a);   // full reduction to a scalar
    int mean(int a);  // full reduction to a scalar
    int scale(int a, double c);
    int concat(const std::vector<int>& parts, std::size_t axis);
    int slice(int a, std::size_t axis, std::size_t begin, std::size_t end);
    int stack(const std::vector<int>& scalars);       // scalars -> 1-d vector
    int reshape(int a, Shape s);                      // same element count, new shape
    int bias_add(int mat, int vec);                   // out[i,j] = mat[i,j] + vec[j]
    int scale_rows(int mat, int col);                 // out[i,j] = mat[i,j] * col[i]
    int clamp_min(int a, double floor);
    int cross_entropy(int logits, const std::vector<std::uint32_t>& labels);  // mean NLL

    int custom(const char* op, Tensor value, std::vector<int> inputs, BackwardFn backward);

    const Tensor& value(int id) const { return node_at(id).value; }
    bool requires_grad(int id) const { return node_at(id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    // Gradient buffer of a node; throws if the node does not require grad or
    // backward() has not run yet.
    std::span<const double> grad(int id) const;
    Tensor grad_tensor(int id) const;

    // Elementwise-adds `delta` into the grad buffer of `id`; no-op when the
    // node does not require grad.
    void accumulate_grad(int id, std::span<const double> delta);

    // Fills grads of every requires-grad node reachable from `loss`; leaves
    // that require grad but do not reach the loss get zero grads. A tape can
    // run backward once.
    void backward(int loss);

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        bool requires_grad = false;
        bool grad_ready = false;
        std::vector<int> inputs;
        BackwardFn backward;
        const char* op = "leaf";
    };

    Node& node_at(int id);
    const Node& node_at(int id) const;
    int push(const char* op, Tensor value, std::vector<int> inputs, BackwardFn backward);
    bool any_requires_grad(const std::vector<int>& ids) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace spottune
