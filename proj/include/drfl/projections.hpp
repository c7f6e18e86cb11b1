#pragma once

#include "drfl/types.hpp"

namespace drfl {

// Orthogonal projections onto norm balls of radius r > 0, and the proximal
// operator of a scaled dual norm obtained from them by the Moreau identity
//   prox_{scale * ||.||_dual}(u) = u - scale * Proj_{B_p}(u / scale),
// where B_p is the unit p-ball and ||.||_dual is the norm dual to ||.||_p.

// Exact sort-based projection: returns x if ||x||_1 <= r, otherwise the
// soft-thresholded point T_delta(x) with delta chosen so the result has
// l1 norm exactly r.
Vec project_l1_ball(const Vec& x, double r);

Vec project_l2_ball(const Vec& x, double r);

Vec project_linf_ball(const Vec& x, double r);

Vec project_ball(const Vec& x, double r, NormKind p);

Vec prox_dual_norm(const Vec& u, double scale, NormKind p);

double norm_of(const Vec& x, NormKind p);

// The dual pairing l1 <-> linf, l2 <-> l2.
NormKind dual_norm_kind(NormKind p);

}  // namespace drfl
