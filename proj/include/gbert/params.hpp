#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gbert/rng.hpp"
#include "gbert/tensor.hpp"

namespace gbert {

struct NamedParam {
    std::string name;
    Tensor tensor;
    bool decay = true;  // false for biases, layer-norm gains/biases
};

/// Ordered collection of trainable tensors. Order is the registration order
/// and fixes checkpoint layout and optimizer iteration.
class ParamSet {
public:
    void add(std::string name, Tensor tensor, bool decay);
    void append(const ParamSet& other);

    const NamedParam* find(const std::string& name) const;
    const std::vector<NamedParam>& items() const noexcept { return items_; }
    std::size_t total_size() const;
    void zero_grad();

    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    std::size_t size() const noexcept { return items_.size(); }

private:
    std::vector<NamedParam> items_;
};

namespace init {

Tensor normal(Shape shape, double stddev, Rng& rng);
Tensor zeros(Shape shape);
Tensor ones(Shape shape);

}  // namespace init

}  // namespace gbert
