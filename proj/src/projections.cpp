#include "drfl/projections.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drfl {

Vec project_l1_ball(const Vec& x, double r) {
    if (r <= 0.0) throw std::invalid_argument("project_l1_ball: radius must be positive");
    const double norm1 = x.lpNorm<1>();
    if (norm1 <= r) return x;

    // Find delta with sum_i max(|x_i| - delta, 0) = r. Sorting |x| descending
    // gives the breakpoint structure: with the k largest magnitudes active,
    // delta = (prefix_k - r) / k, valid while delta < |x|_(k).
    const auto n = x.size();
    std::vector<double> mag(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mag[static_cast<std::size_t>(i)] = std::abs(x[i]);
    std::sort(mag.begin(), mag.end(), std::greater<double>());

    double prefix = 0.0;
    double delta = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        prefix += mag[k];
        const double cand = (prefix - r) / static_cast<double>(k + 1);
        if (k + 1 == mag.size() || cand >= mag[k + 1]) {
            delta = cand;
            break;
        }
    }

    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double shrunk = std::max(std::abs(x[i]) - delta, 0.0);
        out[i] = x[i] >= 0.0 ? shrunk : -shrunk;
    }
    return out;
}

Vec project_l2_ball(const Vec& x, double r) {
    if (r <= 0.0) throw std::invalid_argument("project_l2_ball: radius must be positive");
    const double norm2 = x.norm();
    if (norm2 <= r) return x;
    return x * (r / norm2);
}

Vec project_linf_ball(const Vec& x, double r) {
    if (r <= 0.0) throw std::invalid_argument("project_linf_ball: radius must be positive");
    return x.cwiseMax(-r).cwiseMin(r);
}

Vec project_ball(const Vec& x, double r, NormKind p) {
    switch (p) {
        case NormKind::l1: return project_l1_ball(x, r);
        case NormKind::l2: return project_l2_ball(x, r);
        case NormKind::linf: return project_linf_ball(x, r);
    }
    throw std::logic_error("project_ball: unknown norm");
}

Vec prox_dual_norm(const Vec& u, double scale, NormKind p) {
    if (scale <= 0.0) throw std::invalid_argument("prox_dual_norm: scale must be positive");
    return u - scale * project_ball(u / scale, 1.0, p);
}

double norm_of(const Vec& x, NormKind p) {
    switch (p) {
        case NormKind::l1: return x.lpNorm<1>();
        case NormKind::l2: return x.norm();
        case NormKind::linf: return x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>();
    }
    throw std::logic_error("norm_of: unknown norm");
}

NormKind dual_norm_kind(NormKind p) {
    switch (p) {
        case NormKind::l1: return NormKind::linf;
        case NormKind::l2: return NormKind::l2;
        case NormKind::linf: return NormKind::l1;
    }
    throw std::logic_error("dual_norm_kind: unknown norm");
}

}  // namespace drfl
