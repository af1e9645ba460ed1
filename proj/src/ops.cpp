#include "gbert/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gbert/errors.hpp"

namespace gbert::ops {

namespace {

using detail::Node;

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward, const char* op) {
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value = std::move(values);
    n->op = op;
    const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
    if (needs) {
        n->requires_grad = true;
        n->inputs.reserve(inputs.size());
        for (auto& t : inputs) {
            n->inputs.push_back(t.node());
        }
        n->backward = std::move(backward);
    }
    return Tensor::from_node(std::move(n));
}

// Gradient buffer of input i, or nullptr when that input is constant.
std::vector<double>* grad_of(Node& self, std::size_t i) {
    Node& in = *self.inputs[i];
    return in.requires_grad ? &in.grad_buffer() : nullptr;
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape().str() + " and " +
                     b.shape().str());
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        mismatch(op, a, b);
    }
}

// c[m×n] += a[m×k] · b[k×n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) {
                continue;
            }
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

// c[m×n] += a[m×k] · b[n×k]ᵀ
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s += ai[p] * bj[p];
            }
            c[i * n + j] += s;
        }
    }
}

// c[k×n] += a[m×k]ᵀ · b[m×n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) {
                continue;
            }
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                cp[j] += av * bi[j];
            }
        }
    }
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        mismatch("matmul", a, b);
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
    return make_result({m, n}, std::move(out), {a, b},
                       [m, k, n](Node& self) {
                           const double* g = self.grad.data();
                           const Node& na = *self.inputs[0];
                           const Node& nb = *self.inputs[1];
                           if (auto* ga = grad_of(self, 0)) {
                               gemm_nt(g, nb.value.data(), ga->data(), m, n, k);
                           }
                           if (auto* gb = grad_of(self, 1)) {
                               gemm_tn(na.value.data(), g, gb->data(), m, k, n);
                           }
                       },
                       "matmul");
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) {
        mismatch("matmul_nt", a, b);
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    std::vector<double> out(m * n, 0.0);
    gemm_nt(a.values().data(), b.values().data(), out.data(), m, k, n);
    return make_result({m, n}, std::move(out), {a, b},
                       [m, k, n](Node& self) {
                           const double* g = self.grad.data();
                           const Node& na = *self.inputs[0];
                           const Node& nb = *self.inputs[1];
                           if (auto* ga = grad_of(self, 0)) {
                               gemm_nn(g, nb.value.data(), ga->data(), m, n, k);
                           }
                           if (auto* gb = grad_of(self, 1)) {
                               gemm_tn(g, na.value.data(), gb->data(), m, n, k);
                           }
                       },
                       "matmul_nt");
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(a.size());
    auto v = a.values();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[j * r + i] = v[i * c + j];
        }
    }
    return make_result({c, r}, std::move(out), {a},
                       [r, c](Node& self) {
                           auto& ga = *grad_of(self, 0);
                           for (std::size_t i = 0; i < r; ++i) {
                               for (std::size_t j = 0; j < c; ++j) {
                                   ga[i * c + j] += self.grad[j * r + i];
                               }
                           }
                       },
                       "transpose");
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same("add", a, b);
    std::vector<double> out(a.values().begin(), a.values().end());
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += bv[i];
    }
    return make_result(a.shape(), std::move(out), {a, b},
                       [](Node& self) {
                           for (std::size_t k = 0; k < 2; ++k) {
                               if (auto* g = grad_of(self, k)) {
                                   for (std::size_t i = 0; i < g->size(); ++i) {
                                       (*g)[i] += self.grad[i];
                                   }
                               }
                           }
                       },
                       "add");
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        mismatch("add_row", a, row);
    }
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(a.values().begin(), a.values().end());
    auto rv = row.values();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] += rv[j];
        }
    }
    return make_result(a.shape(), std::move(out), {a, row},
                       [r, c](Node& self) {
                           if (auto* ga = grad_of(self, 0)) {
                               for (std::size_t i = 0; i < ga->size(); ++i) {
                                   (*ga)[i] += self.grad[i];
                               }
                           }
                           if (auto* gr = grad_of(self, 1)) {
                               for (std::size_t i = 0; i < r; ++i) {
                                   for (std::size_t j = 0; j < c; ++j) {
                                       (*gr)[j] += self.grad[i * c + j];
                                   }
                               }
                           }
                       },
                       "add_row");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same("mul", a, b);
    std::vector<double> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = av[i] * bv[i];
    }
    return make_result(a.shape(), std::move(out), {a, b},
                       [](Node& self) {
                           const auto& av = self.inputs[0]->value;
                           const auto& bv = self.inputs[1]->value;
                           if (auto* ga = grad_of(self, 0)) {
                               for (std::size_t i = 0; i < ga->size(); ++i) {
                                   (*ga)[i] += self.grad[i] * bv[i];
                               }
                           }
                           if (auto* gb = grad_of(self, 1)) {
                               for (std::size_t i = 0; i < gb->size(); ++i) {
                                   (*gb)[i] += self.grad[i] * av[i];
                               }
                           }
                       },
                       "mul");
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.values().begin(), a.values().end());
    for (double& v : out) {
        v *= s;
    }
    return make_result(a.shape(), std::move(out), {a},
                       [s](Node& self) {
                           auto& ga = *grad_of(self, 0);
                           for (std::size_t i = 0; i < ga.size(); ++i) {
                               ga[i] += s * self.grad[i];
                           }
                       },
                       "scale");
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) {
        s += v;
    }
    return make_result({1, 1}, {s}, {a},
                       [](Node& self) {
                           auto& ga = *grad_of(self, 0);
                           for (double& g : ga) {
                               g += self.grad[0];
                           }
                       },
                       "sum");
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    auto av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = sigmoid_scalar(av[i]);
    }
    return make_result(a.shape(), std::move(out), {a},
                       [](Node& self) {
                           auto& ga = *grad_of(self, 0);
                           for (std::size_t i = 0; i < ga.size(); ++i) {
                               const double y = self.value[i];
                               ga[i] += self.grad[i] * y * (1.0 - y);
                           }
                       },
                       "sigmoid");
}

Tensor gelu(const Tensor& a) {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double c = 0.044715;
    std::vector<double> out(a.size());
    auto av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = av[i];
        out[i] = 0.5 * x * (1.0 + std::tanh(k * (x + c * x * x * x)));
    }
    return make_result(a.shape(), std::move(out), {a},
                       [](Node& self) {
                           auto& ga = *grad_of(self, 0);
                           const auto& xv = self.inputs[0]->value;
                           for (std::size_t i = 0; i < ga.size(); ++i) {
                               const double x = xv[i];
                               const double t = std::tanh(k * (x + c * x * x * x));
                               const double d =
                                   0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * k * (1.0 + 3.0 * c * x * x);
                               ga[i] += self.grad[i] * d;
                           }
                       },
                       "gelu");
}

Tensor glu(const Tensor& a, const Tensor& b) {
    require_same("glu", a, b);
    std::vector<double> gate(b.size());
    std::vector<double> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        gate[i] = sigmoid_scalar(bv[i]);
        out[i] = av[i] * gate[i];
    }
    return make_result(a.shape(), std::move(out), {a, b},
                       [gate = std::move(gate)](Node& self) {
                           const auto& av = self.inputs[0]->value;
                           if (auto* ga = grad_of(self, 0)) {
                               for (std::size_t i = 0; i < ga->size(); ++i) {
                                   (*ga)[i] += self.grad[i] * gate[i];
                               }
                           }
                           if (auto* gb = grad_of(self, 1)) {
                               for (std::size_t i = 0; i < gb->size(); ++i) {
                                   (*gb)[i] += self.grad[i] * av[i] * gate[i] * (1.0 - gate[i]);
                               }
                           }
                       },
                       "glu");
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (gain.rows() != 1 || gain.cols() != x.cols()) {
        mismatch("layer_norm(gain)", x, gain);
    }
    if (bias.shape() != gain.shape()) {
        mismatch("layer_norm(bias)", gain, bias);
    }
    if (!(eps > 0.0)) {
        throw ShapeError("layer_norm: eps must be positive");
    }
    const std::size_t r = x.rows(), c = x.cols();
    auto xv = x.values();
    auto gv = gain.values();
    auto bv = bias.values();
    std::vector<double> xhat(x.size());
    std::vector<double> inv_std(r);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = xv.data() + i * c;
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            mean += row[j];
        }
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            const double h = (row[j] - mean) * inv_std[i];
            xhat[i * c + j] = h;
            out[i * c + j] = h * gv[j] + bv[j];
        }
    }
    return make_result(
        x.shape(), std::move(out), {x, gain, bias},
        [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
            const auto& gv = self.inputs[1]->value;
            const double* g = self.grad.data();
            if (auto* gx = grad_of(self, 0)) {
                for (std::size_t i = 0; i < r; ++i) {
                    double mean_d = 0.0;
                    double mean_dh = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double d = g[i * c + j] * gv[j];
                        mean_d += d;
                        mean_dh += d * xhat[i * c + j];
                    }
                    mean_d /= static_cast<double>(c);
                    mean_dh /= static_cast<double>(c);
                    for (std::size_t j = 0; j < c; ++j) {
                        const double d = g[i * c + j] * gv[j];
                        (*gx)[i * c + j] += inv_std[i] * (d - mean_d - xhat[i * c + j] * mean_dh);
                    }
                }
            }
            if (auto* gg = grad_of(self, 1)) {
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                        (*gg)[j] += g[i * c + j] * xhat[i * c + j];
                    }
                }
            }
            if (auto* gb = grad_of(self, 2)) {
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                        (*gb)[j] += g[i * c + j];
                    }
                }
            }
        },
        "layer_norm");
}

Tensor softmax_rows(const Tensor& x, const std::vector<bool>& mask) {
    if (!mask.empty() && mask.size() != x.size()) {
        throw ShapeError("softmax_rows: mask has " + std::to_string(mask.size()) +
                         " entries for input " + x.shape().str());
    }
    const std::size_t r = x.rows(), c = x.cols();
    auto xv = x.values();
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < c; ++j) {
            if (mask.empty() || mask[i * c + j]) {
                mx = std::max(mx, xv[i * c + j]);
                any = true;
            }
        }
        if (!any) {
            throw ShapeError("softmax_rows: row " + std::to_string(i) + " is fully masked");
        }
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (mask.empty() || mask[i * c + j]) {
                out[i * c + j] = std::exp(xv[i * c + j] - mx);
                z += out[i * c + j];
            }
        }
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] /= z;
        }
    }
    return make_result(x.shape(), std::move(out), {x},
                       [r, c](Node& self) {
                           auto& gx = *grad_of(self, 0);
                           for (std::size_t i = 0; i < r; ++i) {
                               double dot = 0.0;
                               for (std::size_t j = 0; j < c; ++j) {
                                   dot += self.grad[i * c + j] * self.value[i * c + j];
                               }
                               for (std::size_t j = 0; j < c; ++j) {
                                   gx[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - dot);
                               }
                           }
                       },
                       "softmax_rows");
}

Tensor max_pool_rows(const Tensor& x, const std::vector<bool>& mask) {
    const std::size_t r = x.rows(), c = x.cols();
    if (mask.size() != r) {
        throw ShapeError("max_pool_rows: mask has " + std::to_string(mask.size()) +
                         " entries for " + std::to_string(r) + " rows");
    }
    std::size_t first = r;
    for (std::size_t i = 0; i < r; ++i) {
        if (mask[i]) {
            first = i;
            break;
        }
    }
    if (first == r) {
        throw ShapeError("max_pool_rows: every row is masked");
    }
    auto xv = x.values();
    std::vector<double> out(c);
    std::vector<std::size_t> arg(c, first);
    for (std::size_t j = 0; j < c; ++j) {
        out[j] = xv[first * c + j];
    }
    for (std::size_t i = first + 1; i < r; ++i) {
        if (!mask[i]) {
            continue;
        }
        for (std::size_t j = 0; j < c; ++j) {
            if (xv[i * c + j] > out[j]) {  // strict: ties keep the lower row
                out[j] = xv[i * c + j];
                arg[j] = i;
            }
        }
    }
    return make_result({1, c}, std::move(out), {x},
                       [c, arg = std::move(arg)](Node& self) {
                           auto& gx = *grad_of(self, 0);
                           for (std::size_t j = 0; j < c; ++j) {
                               gx[arg[j] * c + j] += self.grad[j];
                           }
                       },
                       "max_pool_rows");
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets,
                     const std::vector<double>& weights) {
    const std::size_t n = logits.rows(), classes = logits.cols();
    if (targets.size() != n || weights.size() != n) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets and " +
                         std::to_string(weights.size()) + " weights for logits " +
                         logits.shape().str());
    }
    double total_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] < 0.0) {
            throw ShapeError("cross_entropy: negative weight at row " + std::to_string(i));
        }
        if (weights[i] > 0.0 && targets[i] >= classes) {
            throw ShapeError("cross_entropy: target " + std::to_string(targets[i]) +
                             " out of range for " + std::to_string(classes) + " classes");
        }
        total_w += weights[i];
    }
    if (!(total_w > 0.0)) {
        throw ShapeError("cross_entropy: weight mask sums to zero");
    }
    auto lv = logits.values();
    std::vector<double> probs(logits.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] <= 0.0) {
            continue;
        }
        const double* row = lv.data() + i * classes;
        const double mx = *std::max_element(row, row + classes);
        double z = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            probs[i * classes + k] = std::exp(row[k] - mx);
            z += probs[i * classes + k];
        }
        for (std::size_t k = 0; k < classes; ++k) {
            probs[i * classes + k] /= z;
        }
        const double log_p = row[targets[i]] - mx - std::log(z);
        loss -= weights[i] * log_p;
    }
    loss /= total_w;
    return make_result({1, 1}, {loss}, {logits},
                       [n, classes, targets, weights, total_w, probs = std::move(probs)](Node& self) {
                           auto& g = *grad_of(self, 0);
                           const double up = self.grad[0];
                           for (std::size_t i = 0; i < n; ++i) {
                               if (weights[i] <= 0.0) {
                                   continue;
                               }
                               const double w = up * weights[i] / total_w;
                               for (std::size_t k = 0; k < classes; ++k) {
                                   g[i * classes + k] += w * probs[i * classes + k];
                               }
                               g[i * classes + targets[i]] -= w;
                           }
                       },
                       "cross_entropy");
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
    const std::size_t c = table.cols();
    if (ids.empty()) {
        throw ShapeError("gather_rows: empty id list");
    }
    std::vector<double> out(ids.size() * c);
    auto tv = table.values();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= table.rows()) {
            throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " at position " +
                             std::to_string(i) + " out of range for table " + table.shape().str());
        }
        std::copy_n(tv.data() + ids[i] * c, c, out.data() + i * c);
    }
    return make_result({ids.size(), c}, std::move(out), {table},
                       [c, ids](Node& self) {
                           auto& g = *grad_of(self, 0);
                           for (std::size_t i = 0; i < ids.size(); ++i) {
                               for (std::size_t j = 0; j < c; ++j) {
                                   g[ids[i] * c + j] += self.grad[i * c + j];
                               }
                           }
                       },
                       "gather_rows");
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
    if (top.cols() != bottom.cols()) {
        mismatch("concat_rows", top, bottom);
    }
    std::vector<double> out;
    out.reserve(top.size() + bottom.size());
    out.insert(out.end(), top.values().begin(), top.values().end());
    out.insert(out.end(), bottom.values().begin(), bottom.values().end());
    const std::size_t split = top.size();
    return make_result({top.rows() + bottom.rows(), top.cols()}, std::move(out), {top, bottom},
                       [split](Node& self) {
                           if (auto* g = grad_of(self, 0)) {
                               for (std::size_t i = 0; i < split; ++i) {
                                   (*g)[i] += self.grad[i];
                               }
                           }
                           if (auto* g = grad_of(self, 1)) {
                               for (std::size_t i = 0; i < g->size(); ++i) {
                                   (*g)[i] += self.grad[split + i];
                               }
                           }
                       },
                       "concat_rows");
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_cols: no inputs");
    }
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        if (p.rows() != r) {
            mismatch("concat_cols", parts[0], p);
        }
        offsets.push_back(total);
        total += p.cols();
    }
    std::vector<double> out(r * total);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::size_t pc = parts[k].cols();
        auto pv = parts[k].values();
        for (std::size_t i = 0; i < r; ++i) {
            std::copy_n(pv.data() + i * pc, pc, out.data() + i * total + offsets[k]);
        }
    }
    return make_result({r, total}, std::move(out), parts,
                       [r, total, offsets](Node& self) {
                           for (std::size_t k = 0; k < offsets.size(); ++k) {
                               auto* g = grad_of(self, k);
                               if (!g) {
                                   continue;
                               }
                               const std::size_t pc = self.inputs[k]->shape.cols;
                               for (std::size_t i = 0; i < r; ++i) {
                                   for (std::size_t j = 0; j < pc; ++j) {
                                       (*g)[i * pc + j] += self.grad[i * total + offsets[k] + j];
                                   }
                               }
                           }
                       },
                       "concat_cols");
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    if (begin >= end || end > x.cols()) {
        throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for " + x.shape().str());
    }
    const std::size_t r = x.rows(), c = x.cols(), w = end - begin;
    std::vector<double> out(r * w);
    auto xv = x.values();
    for (std::size_t i = 0; i < r; ++i) {
        std::copy_n(xv.data() + i * c + begin, w, out.data() + i * w);
    }
    return make_result({r, w}, std::move(out), {x},
                       [r, c, w, begin](Node& self) {
                           auto& g = *grad_of(self, 0);
                           for (std::size_t i = 0; i < r; ++i) {
                               for (std::size_t j = 0; j < w; ++j) {
                                   g[i * c + begin + j] += self.grad[i * w + j];
                               }
                           }
                       },
                       "slice_cols");
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
    if (begin >= end || end > x.rows()) {
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for " + x.shape().str());
    }
    const std::size_t c = x.cols();
    auto xv = x.values();
    std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(begin * c),
                            xv.begin() + static_cast<std::ptrdiff_t>(end * c));
    return make_result({end - begin, c}, std::move(out), {x},
                       [offset = begin * c](Node& self) {
                           auto& g = *grad_of(self, 0);
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               g[offset + i] += self.grad[i];
                           }
                       },
                       "slice_rows");
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
    if (p <= 0.0) {
        return x;
    }
    if (p >= 1.0) {
        throw ShapeError("dropout: probability must be < 1");
    }
    const double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> factor(x.size());
    std::vector<double> out(x.size());
    auto xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        factor[i] = rng.uniform() < p ? 0.0 : keep_scale;
        out[i] = xv[i] * factor[i];
    }
    return make_result(x.shape(), std::move(out), {x},
                       [factor = std::move(factor)](Node& self) {
                           auto& g = *grad_of(self, 0);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               g[i] += self.grad[i] * factor[i];
                           }
                       },
                       "dropout");
}

Tensor custom(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
              std::function<void(Node&)> backward, const char* op) {
    if (values.size() != shape.size()) {
        throw ShapeError(std::string(op) + ": " + std::to_string(values.size()) +
                         " values for shape " + shape.str());
    }
    return make_result(shape, std::move(values), std::move(inputs), std::move(backward), op);
}

std::vector<double>* input_grad(Node& self, std::size_t i) {
    return grad_of(self, i);
}

}  // namespace gbert::ops
