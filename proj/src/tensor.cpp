#include "gbert/tensor.hpp"

#include <unordered_set>

#include "gbert/errors.hpp"

namespace gbert {

std::string Shape::str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    if (shape.rows == 0 || shape.cols == 0) {
        throw ShapeError("tensor extents must be positive, got " + shape.str());
    }
    if (values.size() != shape.size()) {
        throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape.str());
    }
    auto n = std::make_shared<detail::Node>();
    n->shape = shape;
    n->value = std::move(values);
    return from_node(std::move(n));
}

Tensor Tensor::constant(Shape shape, double fill) {
    return constant(shape, std::vector<double>(shape.size(), fill));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    Tensor t = constant(shape, std::move(values));
    t.node_->requires_grad = true;
    return t;
}

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("item() on non-scalar tensor " + shape().str());
    }
    return node_->value[0];
}

void Tensor::backward() const {
    if (!node_ || node_->shape != Shape{1, 1}) {
        throw ShapeError("backward() requires a scalar root, got " +
                         (node_ ? node_->shape.str() : std::string("<undefined>")));
    }
    if (!node_->requires_grad) {
        return;
    }

    // Iterative post-order DFS gives a topological order (inputs first).
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->inputs.size()) {
            detail::Node* child = n->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (detail::Node* n : order) {
        if (!n->is_leaf()) {
            n->grad.assign(n->value.size(), 0.0);
        }
    }
    node_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (!(*it)->is_leaf()) {
            (*it)->backward(**it);
        }
    }
}

}  // namespace gbert
