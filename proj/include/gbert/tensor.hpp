#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gbert {

/// Row-major 2-D extents. Vectors are 1×n rows; scalars are 1×1.
struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const noexcept { return rows * cols; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first touched by backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;  // empty for leaves
    const char* op = "leaf";

    bool is_leaf() const noexcept { return !backward; }
    std::vector<double>& grad_buffer() {
        if (grad.empty()) {
            grad.assign(value.size(), 0.0);
        }
        return grad;
    }
};

}  // namespace detail

/// Handle to a node of the differentiation graph. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor constant(Shape shape, double fill = 0.0);
    static Tensor scalar(double v) { return constant({1, 1}, v); }
    /// Trainable leaf.
    static Tensor parameter(Shape shape, std::vector<double> values);

    bool defined() const noexcept { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    std::size_t rows() const { return node_->shape.rows; }
    std::size_t cols() const { return node_->shape.cols; }
    std::size_t size() const { return node_->value.size(); }

    std::span<const double> values() const { return node_->value; }
    std::span<double> mutable_values() { return node_->value; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    void zero_grad() { node_->grad.clear(); }

    /// Reverse-mode pass from a 1×1 root. Leaf gradients accumulate across
    /// calls; intermediate gradients are recomputed each call.
    void backward() const;

    /// Detached copy of the values (no graph, not trainable).
    Tensor detach() const { return constant(shape(), node_->value); }

    const std::shared_ptr<detail::Node>& node() const { return node_; }

    static Tensor from_node(std::shared_ptr<detail::Node> n) {
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }

private:
    std::shared_ptr<detail::Node> node_;
};

}  // namespace gbert
