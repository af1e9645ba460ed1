#include "gbert/params.hpp"

#include "gbert/errors.hpp"

namespace gbert {

void ParamSet::add(std::string name, Tensor tensor, bool decay) {
    if (find(name) != nullptr) {
        throw UsageError("duplicate parameter name '" + name + "'");
    }
    items_.push_back({std::move(name), std::move(tensor), decay});
}

void ParamSet::append(const ParamSet& other) {
    for (const auto& p : other.items_) {
        add(p.name, p.tensor, p.decay);
    }
}

const NamedParam* ParamSet::find(const std::string& name) const {
    for (const auto& p : items_) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

std::size_t ParamSet::total_size() const {
    std::size_t n = 0;
    for (const auto& p : items_) {
        n += p.tensor.size();
    }
    return n;
}

void ParamSet::zero_grad() {
    for (auto& p : items_) {
        p.tensor.zero_grad();
    }
}

namespace init {

Tensor normal(Shape shape, double stddev, Rng& rng) {
    std::vector<double> v(shape.size());
    for (double& x : v) {
        x = stddev * rng.normal();
    }
    return Tensor::parameter(shape, std::move(v));
}

Tensor zeros(Shape shape) {
    return Tensor::parameter(shape, std::vector<double>(shape.size(), 0.0));
}

Tensor ones(Shape shape) {
    return Tensor::parameter(shape, std::vector<double>(shape.size(), 1.0));
}

}  // namespace init

}  // namespace gbert
