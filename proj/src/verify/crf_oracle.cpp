#include "gbert/verify/crf_oracle.hpp"

#include <cmath>
#include <limits>

#include "gbert/errors.hpp"

namespace gbert::verify {

EnumerationResult enumerate_paths(const Tensor& emissions, std::size_t m, const CrfParams& crf) {
    const std::size_t t = crf.num_tags();
    if (m == 0 || m > emissions.rows()) {
        throw ShapeError("enumerate_paths: bad prefix length");
    }
    std::vector<double> scores;
    std::vector<std::size_t> path(m, 0);
    EnumerationResult r;
    r.best_score = -std::numeric_limits<double>::infinity();
    while (true) {
        const double s = crf_path_score(emissions, path, crf);
        scores.push_back(s);
        if (s > r.best_score) {
            r.best_score = s;
            r.best_path = path;
        }
        // odometer increment, last position fastest
        std::size_t p = m;
        while (p > 0 && ++path[p - 1] == t) {
            path[p - 1] = 0;
            --p;
        }
        if (p == 0) break;
    }
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - r.best_score);
    r.log_partition = r.best_score + std::log(sum);
    r.paths = scores.size();
    return r;
}

}  // namespace gbert::verify
