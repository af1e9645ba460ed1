#include "gbert/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "gbert/errors.hpp"
#include "gbert/ops.hpp"

namespace gbert {

namespace {

double log_sum_exp(const double* v, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
    if (std::isinf(m)) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

void check_shapes(const Tensor& emissions, const CrfParams& crf) {
    const std::size_t t = crf.num_tags();
    if (crf.transitions.cols() != t || crf.start.shape() != Shape{1, t} || crf.end.shape() != Shape{1, t}) {
        throw ShapeError("crf: inconsistent parameter shapes");
    }
    if (emissions.cols() != t) {
        throw ShapeError("crf: emissions " + emissions.shape().str() + " do not have " + std::to_string(t) +
                         " tag columns");
    }
}

// Forward and backward log-space tables over the first m rows.
struct Lattice {
    std::size_t m = 0, t = 0;
    std::vector<double> alpha, beta;
    double log_z = 0.0;
};

Lattice run_lattice(const double* e, const double* tr, const double* st, const double* en, std::size_t m,
                    std::size_t t) {
    Lattice l;
    l.m = m;
    l.t = t;
    l.alpha.assign(m * t, 0.0);
    l.beta.assign(m * t, 0.0);
    std::vector<double> buf(t);
    for (std::size_t j = 0; j < t; ++j) l.alpha[j] = st[j] + e[j];
    for (std::size_t p = 1; p < m; ++p) {
        for (std::size_t j = 0; j < t; ++j) {
            for (std::size_t i = 0; i < t; ++i) buf[i] = l.alpha[(p - 1) * t + i] + tr[i * t + j];
            l.alpha[p * t + j] = log_sum_exp(buf.data(), t) + e[p * t + j];
        }
    }
    for (std::size_t i = 0; i < t; ++i) l.beta[(m - 1) * t + i] = en[i];
    for (std::size_t p = m - 1; p-- > 0;) {
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = 0; j < t; ++j) buf[j] = tr[i * t + j] + e[(p + 1) * t + j] + l.beta[(p + 1) * t + j];
            l.beta[p * t + i] = log_sum_exp(buf.data(), t);
        }
    }
    for (std::size_t j = 0; j < t; ++j) buf[j] = l.alpha[(m - 1) * t + j] + en[j];
    l.log_z = log_sum_exp(buf.data(), t);
    return l;
}

// Adds g · (expected counts − gold counts) into the input gradients. Inputs
// are ordered emissions, transitions, start, end.
void accumulate(detail::Node& self, const std::vector<std::size_t>* gold, std::size_t m) {
    const double g = self.grad[0];
    const auto& in = self.inputs;
    const double* e = in[0]->value.data();
    const double* tr = in[1]->value.data();
    const std::size_t t = in[1]->shape.rows;
    const Lattice l = run_lattice(e, tr, in[2]->value.data(), in[3]->value.data(), m, t);

    auto* ge = ops::input_grad(self, 0);
    auto* gt = ops::input_grad(self, 1);
    auto* gs = ops::input_grad(self, 2);
    auto* gn = ops::input_grad(self, 3);
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t j = 0; j < t; ++j) {
            const double marg = std::exp(l.alpha[p * t + j] + l.beta[p * t + j] - l.log_z);
            if (ge) (*ge)[p * t + j] += g * marg;
            if (gs && p == 0) (*gs)[j] += g * marg;
            if (gn && p == m - 1) (*gn)[j] += g * marg;
        }
        if (gt && p + 1 < m) {
            for (std::size_t i = 0; i < t; ++i)
                for (std::size_t j = 0; j < t; ++j) {
                    const double pair = std::exp(l.alpha[p * t + i] + tr[i * t + j] + e[(p + 1) * t + j] +
                                                 l.beta[(p + 1) * t + j] - l.log_z);
                    (*gt)[i * t + j] += g * pair;
                }
        }
    }
    if (!gold) return;
    const auto& y = *gold;
    for (std::size_t p = 0; p < m; ++p) {
        if (ge) (*ge)[p * t + y[p]] -= g;
        if (gt && p + 1 < m) (*gt)[y[p] * t + y[p + 1]] -= g;
    }
    if (gs) (*gs)[y[0]] -= g;
    if (gn) (*gn)[y[m - 1]] -= g;
}

}  // namespace

CrfParams CrfParams::init(std::size_t hidden, std::size_t tags, double init_std, Rng& rng) {
    if (tags < 1) {
        throw UsageError("crf needs at least one tag");
    }
    CrfParams c;
    c.emission = init::normal({hidden, tags}, init_std, rng);
    c.transitions = init::zeros({tags, tags});
    c.start = init::zeros({1, tags});
    c.end = init::zeros({1, tags});
    return c;
}

void CrfParams::collect(ParamSet& out) const {
    out.add("crf.emission", emission, true);
    out.add("crf.transitions", transitions, false);
    out.add("crf.start", start, false);
    out.add("crf.end", end, false);
}

Tensor crf_emissions(const Tensor& token_states, const CrfParams& crf) {
    return ops::matmul(token_states, crf.emission);
}

std::size_t crf_prefix_length(const std::vector<bool>& mask, std::size_t n) {
    if (mask.size() != n) {
        throw ShapeError("crf: mask of length " + std::to_string(mask.size()) + " for " + std::to_string(n) +
                         " positions");
    }
    std::size_t m = 0;
    while (m < n && mask[m]) ++m;
    for (std::size_t i = m; i < n; ++i) {
        if (mask[i]) {
            throw ShapeError("crf: mask is not a prefix (position " + std::to_string(i) +
                             " is unmasked after a masked position)");
        }
    }
    if (m == 0) {
        throw ShapeError("crf: no unmasked positions");
    }
    return m;
}

Tensor crf_log_partition(const Tensor& emissions, const std::vector<bool>& mask, const CrfParams& crf) {
    check_shapes(emissions, crf);
    const std::size_t m = crf_prefix_length(mask, emissions.rows());
    const Lattice l = run_lattice(emissions.values().data(), crf.transitions.values().data(),
                                  crf.start.values().data(), crf.end.values().data(), m, crf.num_tags());
    return ops::custom({1, 1}, {l.log_z}, {emissions, crf.transitions, crf.start, crf.end},
                       [m](detail::Node& self) { accumulate(self, nullptr, m); }, "crf_log_partition");
}

double crf_path_score(const Tensor& emissions, const std::vector<std::size_t>& path, const CrfParams& crf) {
    check_shapes(emissions, crf);
    const std::size_t t = crf.num_tags();
    if (path.empty() || path.size() > emissions.rows()) {
        throw ShapeError("crf: path of length " + std::to_string(path.size()) + " for " +
                         std::to_string(emissions.rows()) + " positions");
    }
    for (std::size_t y : path) {
        if (y >= t) throw ShapeError("crf: tag " + std::to_string(y) + " out of range");
    }
    double s = crf.start.values()[path[0]] + crf.end.values()[path.back()];
    for (std::size_t p = 0; p < path.size(); ++p) {
        s += emissions.at(p, path[p]);
        if (p > 0) s += crf.transitions.at(path[p - 1], path[p]);
    }
    return s;
}

Tensor crf_nll(const Tensor& emissions, const std::vector<std::size_t>& gold, const std::vector<bool>& mask,
               const CrfParams& crf) {
    check_shapes(emissions, crf);
    const std::size_t m = crf_prefix_length(mask, emissions.rows());
    if (gold.size() < m) {
        throw ShapeError("crf: " + std::to_string(gold.size()) + " gold tags for " + std::to_string(m) +
                         " unmasked positions");
    }
    auto y = std::make_shared<std::vector<std::size_t>>(gold.begin(), gold.begin() + static_cast<std::ptrdiff_t>(m));
    const Lattice l = run_lattice(emissions.values().data(), crf.transitions.values().data(),
                                  crf.start.values().data(), crf.end.values().data(), m, crf.num_tags());
    const double nll = l.log_z - crf_path_score(emissions, *y, crf);
    return ops::custom({1, 1}, {nll}, {emissions, crf.transitions, crf.start, crf.end},
                       [m, y](detail::Node& self) { accumulate(self, y.get(), m); }, "crf_nll");
}

std::vector<std::size_t> viterbi(const Tensor& emissions, const std::vector<bool>& mask, const CrfParams& crf) {
    check_shapes(emissions, crf);
    const std::size_t m = crf_prefix_length(mask, emissions.rows());
    const std::size_t t = crf.num_tags();
    const auto e = emissions.values();
    const auto tr = crf.transitions.values();
    std::vector<double> delta(m * t);
    std::vector<std::size_t> back(m * t, 0);
    for (std::size_t j = 0; j < t; ++j) delta[j] = crf.start.values()[j] + e[j];
    for (std::size_t p = 1; p < m; ++p) {
        for (std::size_t j = 0; j < t; ++j) {
            std::size_t best = 0;
            double best_score = delta[(p - 1) * t] + tr[j];
            for (std::size_t i = 1; i < t; ++i) {
                const double s = delta[(p - 1) * t + i] + tr[i * t + j];
                if (s > best_score) {
                    best_score = s;
                    best = i;
                }
            }
            delta[p * t + j] = best_score + e[p * t + j];
            back[p * t + j] = best;
        }
    }
    std::size_t last = 0;
    double best_score = delta[(m - 1) * t] + crf.end.values()[0];
    for (std::size_t j = 1; j < t; ++j) {
        const double s = delta[(m - 1) * t + j] + crf.end.values()[j];
        if (s > best_score) {
            best_score = s;
            last = j;
        }
    }
    std::vector<std::size_t> path(m);
    path[m - 1] = last;
    for (std::size_t p = m - 1; p > 0; --p) path[p - 1] = back[p * t + path[p]];
    return path;
}

}  // namespace gbert
