#include "drfl/omega.hpp"

#include "drfl/inner_solver.hpp"
#include "drfl/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drfl {

namespace {

// Affine vector component a'v + a0 of a dual-norm argument.
using AffineComp = std::pair<LinExpr, double>;

double checked_epsilon(const LossSpec& loss) {
    switch (loss.family) {
        case LossFamily::huber:
            if (!loss.epsilon || *loss.epsilon <= 0.0)
                throw std::invalid_argument("huber requires epsilon > 0");
            return *loss.epsilon;
        case LossFamily::svr:
            if (!loss.epsilon || *loss.epsilon < 0.0)
                throw std::invalid_argument("svr requires epsilon >= 0");
            return *loss.epsilon;
        case LossFamily::quantile:
            if (!loss.epsilon || *loss.epsilon < 0.0 || *loss.epsilon > 1.0)
                throw std::invalid_argument("quantile requires epsilon in [0, 1]");
            return *loss.epsilon;
        default:
            if (loss.epsilon)
                throw std::invalid_argument(std::string("epsilon not applicable to ") +
                                            to_string(loss.family));
            return 0.0;
    }
}

[[noreturn]] void unsupported_pair(const LossSpec& loss, const SupportSpec& support) {
    throw std::invalid_argument(std::string("build_omega: no convex reformulation available for ") +
                                to_string(loss.family) + " with " + to_string(support.kind) +
                                " support");
}

LinExpr negated(const LinExpr& a) {
    LinExpr out = a;
    for (LinTerm& t : out) t.coef = -t.coef;
    return out;
}

// Appends `a` scaled by `s` onto `dst`.
void append_scaled(LinExpr& dst, const LinExpr& a, double s) {
    for (const LinTerm& t : a) dst.push_back({t.idx, s * t.coef});
}

// Emits || g(v) ||_* <= rhs'v + rhs0, where the norm being dualized is
// `metric` and g has the given affine components. The dual of l1 is linf
// (per-component box rows), of l2 is l2 (one second-order row), and of linf
// is l1 (auxiliary magnitudes plus their sum). Counts as one dual-norm
// constraint in the system's metadata.
void add_dual_norm(ConstraintSystem& cs, NormKind metric, const std::vector<AffineComp>& comps,
                   const LinExpr& rhs, double rhs0, int& aux_counter) {
    cs.n_dual_norm_rows += 1;
    switch (metric) {
        case NormKind::l1: {
            for (const AffineComp& c : comps) {
                LinExpr row = c.first;
                append_scaled(row, rhs, -1.0);
                cs.add_le(std::move(row), rhs0 - c.second);
                LinExpr neg = negated(c.first);
                append_scaled(neg, rhs, -1.0);
                cs.add_le(std::move(neg), rhs0 + c.second);
            }
            return;
        }
        case NormKind::l2: {
            SocRow row;
            row.u = comps;
            row.c = rhs;
            row.c0 = rhs0;
            cs.soc.push_back(std::move(row));
            return;
        }
        case NormKind::linf: {
            const int k = static_cast<int>(comps.size());
            const int u0 = cs.add_var("dual_aux_" + std::to_string(aux_counter++), k, 0.0, kInf);
            for (int j = 0; j < k; ++j) {
                LinExpr row = comps[j].first;
                row.push_back({u0 + j, -1.0});
                cs.add_le(std::move(row), -comps[j].second);
                LinExpr neg = negated(comps[j].first);
                neg.push_back({u0 + j, -1.0});
                cs.add_le(std::move(neg), comps[j].second);
            }
            LinExpr sum;
            for (int j = 0; j < k; ++j) sum.push_back({u0 + j, 1.0});
            append_scaled(sum, rhs, -1.0);
            cs.add_le(std::move(sum), rhs0);
            return;
        }
    }
    throw std::logic_error("add_dual_norm: unknown metric norm");
}

// Joint regression metric ||x - x'|| + kappa |y - y'| dualizes blockwise to
// max{ ||u||_*, |u_y| / kappa }, so the label component gets its own pair of
// rows against kappa * rhs. Still one dual-norm constraint.
void add_dual_norm_joint(ConstraintSystem& cs, NormKind metric,
                         const std::vector<AffineComp>& feature_comps,
                         const AffineComp& label_comp, double kappa, const LinExpr& rhs,
                         double rhs0, int& aux_counter) {
    add_dual_norm(cs, metric, feature_comps, rhs, rhs0, aux_counter);
    LinExpr row = label_comp.first;
    append_scaled(row, rhs, -kappa);
    cs.add_le(std::move(row), kappa * rhs0 - label_comp.second);
    LinExpr neg = negated(label_comp.first);
    append_scaled(neg, rhs, -kappa);
    cs.add_le(std::move(neg), kappa * rhs0 + label_comp.second);
}

struct OmegaContext {
    const ClientDataset& client;
    int n = 0;
    int N = 0;
    int i_lambda = 0;
    int i_alpha = 0;   // block offset
    int i_w = 0;       // block offset
    int aux_counter = 0;
};

// Shared (lambda, alpha, w) prefix. alpha_lb is 0 for the families whose
// epigraph rows keep alpha nonnegative and -inf where alpha is free.
OmegaContext begin_system(ConstraintSystem& cs, const ClientDataset& client, double alpha_lb) {
    OmegaContext ctx{client};
    ctx.n = client.dim();
    ctx.N = client.size();
    if (ctx.N == 0) throw std::invalid_argument("build_omega: client has no samples");
    ctx.i_lambda = cs.add_var("lambda", 1, 0.0, kInf);
    ctx.i_alpha = cs.add_var("alpha", ctx.N, alpha_lb, kInf);
    ctx.i_w = cs.add_var("w", ctx.n);
    return ctx;
}

LinExpr w_expr(const OmegaContext& ctx, const Vec& coef, double scale) {
    LinExpr e;
    e.reserve(coef.size());
    for (int j = 0; j < coef.size(); ++j) e.push_back({ctx.i_w + j, scale * coef[j]});
    return e;
}

// Validated polyhedral support data for one task. For regression the rows
// are C1 x + c2 y <= d on the joint point; for classification c2 is unused.
struct Polyhedron {
    Mat C;
    Vec c2;
    Vec d;
    int rows() const { return static_cast<int>(d.size()); }
};

Polyhedron polyhedron_for(const SupportSpec& support, Task task, int n) {
    Polyhedron P;
    switch (support.kind) {
        case SupportKind::unbounded:
            P.C = Mat::Zero(0, n);
            P.c2 = Vec::Zero(0);
            P.d = Vec::Zero(0);
            return P;
        case SupportKind::box_symmetric:
        case SupportKind::box_unit: {
            if (task == Task::regression)
                throw std::invalid_argument("box supports apply to classification features only");
            P.C.resize(2 * n, n);
            P.C << Mat::Identity(n, n), -Mat::Identity(n, n);
            P.d.resize(2 * n);
            if (support.kind == SupportKind::box_symmetric) {
                P.d.setOnes();
            } else {
                P.d.head(n).setOnes();
                P.d.tail(n).setZero();
            }
            P.c2 = Vec::Zero(2 * n);
            return P;
        }
        case SupportKind::polyhedral: {
            if (support.C.cols() != n)
                throw std::invalid_argument("support matrix column count does not match dimension");
            if (support.C.rows() != support.d.size())
                throw std::invalid_argument("support right-hand side length does not match rows");
            P.C = support.C;
            P.d = support.d;
            if (task == Task::regression) {
                P.c2 = support.c2.size() ? support.c2 : Vec::Zero(P.rows());
                if (P.c2.size() != P.rows())
                    throw std::invalid_argument("support label coefficients length does not match rows");
            } else {
                if (support.c2.size())
                    throw std::invalid_argument("label coefficients not applicable to classification support");
                P.c2 = Vec::Zero(P.rows());
            }
            return P;
        }
    }
    throw std::logic_error("polyhedron_for: unknown support kind");
}

// --- Regression families ------------------------------------------------

// Huber epigraph per sample: 1/2 mu^2 + eps * t <= alpha with
// t >= |<w, x> - y - mu| split into two linear rows.
void add_huber_epigraph(ConstraintSystem& cs, const OmegaContext& ctx, double eps, int i_mu,
                        int i_t) {
    for (int i = 0; i < ctx.N; ++i) {
        const Sample& s = ctx.client.samples[i];
        LinExpr up = w_expr(ctx, s.x, 1.0);
        up.push_back({i_mu + i, -1.0});
        up.push_back({i_t + i, -1.0});
        cs.add_le(std::move(up), s.y);
        LinExpr dn = w_expr(ctx, s.x, -1.0);
        dn.push_back({i_mu + i, 1.0});
        dn.push_back({i_t + i, -1.0});
        cs.add_le(std::move(dn), -s.y);
        QuadRow q;
        q.a = {{i_mu + i, 1.0}};
        q.c = {{i_t + i, eps}, {ctx.i_alpha + i, -1.0}};
        cs.quad.push_back(std::move(q));
        cs.n_epigraph_rows += 1;
    }
}

ConstraintSystem build_huber(const LossSpec& loss, const SupportSpec& support, double kappa,
                             NormKind metric, const ClientDataset& client) {
    if (support.kind != SupportKind::unbounded) unsupported_pair(loss, support);
    const double eps = checked_epsilon(loss);
    ConstraintSystem cs;
    OmegaContext ctx = begin_system(cs, client, -kInf);
    const int i_mu = cs.add_var("mu", ctx.N);
    const int i_t = cs.add_var("t", ctx.N, 0.0, kInf);
    add_huber_epigraph(cs, ctx, eps, i_mu, i_t);
    // eps * ||(w, -1)||_* <= lambda over the joint metric.
    std::vector<AffineComp> comps;
    for (int j = 0; j < ctx.n; ++j) comps.push_back({{{ctx.i_w + j, eps}}, 0.0});
    add_dual_norm_joint(cs, metric, comps, {LinExpr{}, -eps}, kappa, {{ctx.i_lambda, 1.0}}, 0.0,
                        ctx.aux_counter);
    return cs;
}

// SVR and pinball share their structure: two residual epigraph rows per
// sample with support multipliers phi, and per-sample joint dual-norm rows.
// The scales (up, dn) are (1, 1) for SVR and (eps, 1 - eps) for pinball; the
// offsets are the -eps slack for SVR and zero for pinball.
ConstraintSystem build_regression_polyhedral(const LossSpec& loss, const SupportSpec& support,
                                             double kappa, NormKind metric,
                                             const ClientDataset& client) {
    const double eps = checked_epsilon(loss);
    const bool is_svr = loss.family == LossFamily::svr;
    const double scale_up = is_svr ? 1.0 : eps;          // coefficient of (y - <w,x>)
    const double scale_dn = is_svr ? 1.0 : 1.0 - eps;    // coefficient of (<w,x> - y)
    const double slack = is_svr ? eps : 0.0;

    if (support.kind != SupportKind::unbounded && support.kind != SupportKind::polyhedral)
        unsupported_pair(loss, support);

    ConstraintSystem cs;
    OmegaContext ctx = begin_system(cs, client, 0.0);
    const Polyhedron P = polyhedron_for(support, Task::regression, ctx.n);
    const int r = P.rows();
    const int i_phip = r ? cs.add_var("phi_plus", ctx.N * r, 0.0, kInf) : 0;
    const int i_phim = r ? cs.add_var("phi_minus", ctx.N * r, 0.0, kInf) : 0;

    for (int i = 0; i < ctx.N; ++i) {
        const Sample& s = ctx.client.samples[i];
        const Vec slack_i = P.d - P.C * s.x - P.c2 * s.y;  // d - C1 x_i - c2 y_i
        // scale_up * (y_i - <w, x_i>) - slack + <phi+, slack_i> <= alpha_i
        LinExpr up = w_expr(ctx, s.x, -scale_up);
        for (int k = 0; k < r; ++k) up.push_back({i_phip + i * r + k, slack_i[k]});
        up.push_back({ctx.i_alpha + i, -1.0});
        cs.add_le(std::move(up), slack - scale_up * s.y);
        cs.n_epigraph_rows += 1;
        // scale_dn * (<w, x_i> - y_i) - slack + <phi-, slack_i> <= alpha_i
        LinExpr dn = w_expr(ctx, s.x, scale_dn);
        for (int k = 0; k < r; ++k) dn.push_back({i_phim + i * r + k, slack_i[k]});
        dn.push_back({ctx.i_alpha + i, -1.0});
        cs.add_le(std::move(dn), slack + scale_dn * s.y);
        cs.n_epigraph_rows += 1;
    }

    const LinExpr rhs = {{ctx.i_lambda, 1.0}};
    auto dual_for = [&](int i_phi, int i, double w_scale) {
        // Features: C1' phi + w_scale * w; label: c2' phi - w_scale.
        std::vector<AffineComp> comps(static_cast<size_t>(ctx.n));
        for (int j = 0; j < ctx.n; ++j) {
            LinExpr e = {{ctx.i_w + j, w_scale}};
            for (int k = 0; k < r; ++k)
                if (P.C(k, j) != 0.0) e.push_back({i_phi + i * r + k, P.C(k, j)});
            comps[static_cast<size_t>(j)] = {std::move(e), 0.0};
        }
        LinExpr lbl;
        for (int k = 0; k < r; ++k)
            if (P.c2[k] != 0.0) lbl.push_back({i_phi + i * r + k, P.c2[k]});
        add_dual_norm_joint(cs, metric, comps, {std::move(lbl), -w_scale}, kappa, rhs, 0.0,
                            ctx.aux_counter);
    };

    if (r == 0) {
        // Without support rows the per-sample dual constraints coincide, so
        // they are emitted once per sign.
        if (is_svr) {
            dual_for(0, 0, 1.0);
        } else {
            dual_for(0, 0, eps);
            dual_for(0, 0, -(1.0 - eps));
        }
    } else {
        for (int i = 0; i < ctx.N; ++i) {
            dual_for(i_phip, i, is_svr ? 1.0 : eps);
            dual_for(i_phim, i, is_svr ? -1.0 : -(1.0 - eps));
        }
    }
    return cs;
}

// --- Classification families --------------------------------------------

// Hinge over a feature polyhedron {C x <= d}; boxes expand C = [I; -I].
// The box cases keep the split multipliers (pi for the upper face, tau for
// the lower face) as their own named blocks.
ConstraintSystem build_hinge(const LossSpec& loss, const SupportSpec& support, double kappa,
                             NormKind metric, const ClientDataset& client) {
    checked_epsilon(loss);
    ConstraintSystem cs;
    OmegaContext ctx = begin_system(cs, client, 0.0);
    const Polyhedron P = polyhedron_for(support, Task::classification, ctx.n);
    const int r = P.rows();
    const bool box = support.kind == SupportKind::box_symmetric || support.kind == SupportKind::box_unit;

    int i_pip = 0, i_pim = 0, i_taup = 0, i_taum = 0, i_phip = 0, i_phim = 0;
    if (box) {
        i_pip = cs.add_var("pi_plus", ctx.N * ctx.n, 0.0, kInf);
        i_pim = cs.add_var("pi_minus", ctx.N * ctx.n, 0.0, kInf);
        i_taup = cs.add_var("tau_plus", ctx.N * ctx.n, 0.0, kInf);
        i_taum = cs.add_var("tau_minus", ctx.N * ctx.n, 0.0, kInf);
    } else if (r) {
        i_phip = cs.add_var("phi_plus", ctx.N * r, 0.0, kInf);
        i_phim = cs.add_var("phi_minus", ctx.N * r, 0.0, kInf);
    }

    // Multiplier layout per (sample, face): boxes use pi - tau where the
    // generic corollary uses C' phi, which matches under C = [I; -I],
    // d = [e; e] (symmetric) or [e; 0] (unit).
    for (int i = 0; i < ctx.N; ++i) {
        const Sample& s = ctx.client.samples[i];
        if (box) {
            const bool symmetric = support.kind == SupportKind::box_symmetric;
            // 1 + <-y w - pi+ + tau+, x_i> + <pi+ (+ tau+ if symmetric), e> <= alpha_i
            LinExpr up = w_expr(ctx, s.x, -s.y);
            for (int j = 0; j < ctx.n; ++j) {
                up.push_back({i_pip + i * ctx.n + j, 1.0 - s.x[j]});
                up.push_back({i_taup + i * ctx.n + j, s.x[j] + (symmetric ? 1.0 : 0.0)});
            }
            up.push_back({ctx.i_alpha + i, -1.0});
            cs.add_le(std::move(up), -1.0);
            cs.n_epigraph_rows += 1;
            // 1 + <y w - pi- + tau-, x_i> + <pi- (+ tau-), e> - kappa lambda <= alpha_i
            LinExpr dn = w_expr(ctx, s.x, s.y);
            for (int j = 0; j < ctx.n; ++j) {
                dn.push_back({i_pim + i * ctx.n + j, 1.0 - s.x[j]});
                dn.push_back({i_taum + i * ctx.n + j, s.x[j] + (symmetric ? 1.0 : 0.0)});
            }
            dn.push_back({ctx.i_lambda, -kappa});
            dn.push_back({ctx.i_alpha + i, -1.0});
            cs.add_le(std::move(dn), -1.0);
            cs.n_epigraph_rows += 1;
        } else {
            const Vec slack_i = P.d - P.C * s.x;
            LinExpr up = w_expr(ctx, s.x, -s.y);
            for (int k = 0; k < r; ++k) up.push_back({i_phip + i * r + k, slack_i[k]});
            up.push_back({ctx.i_alpha + i, -1.0});
            cs.add_le(std::move(up), -1.0);
            cs.n_epigraph_rows += 1;
            LinExpr dn = w_expr(ctx, s.x, s.y);
            for (int k = 0; k < r; ++k) dn.push_back({i_phim + i * r + k, slack_i[k]});
            dn.push_back({ctx.i_lambda, -kappa});
            dn.push_back({ctx.i_alpha + i, -1.0});
            cs.add_le(std::move(dn), -1.0);
            cs.n_epigraph_rows += 1;
        }
    }

    const LinExpr rhs = {{ctx.i_lambda, 1.0}};
    if (box) {
        for (int i = 0; i < ctx.N; ++i) {
            const double y = ctx.client.samples[i].y;
            std::vector<AffineComp> cp(static_cast<size_t>(ctx.n));
            std::vector<AffineComp> cm(static_cast<size_t>(ctx.n));
            for (int j = 0; j < ctx.n; ++j) {
                cp[static_cast<size_t>(j)] = {{{i_pip + i * ctx.n + j, 1.0},
                                               {i_taup + i * ctx.n + j, -1.0},
                                               {ctx.i_w + j, y}},
                                              0.0};
                cm[static_cast<size_t>(j)] = {{{i_pim + i * ctx.n + j, 1.0},
                                               {i_taum + i * ctx.n + j, -1.0},
                                               {ctx.i_w + j, -y}},
                                              0.0};
            }
            add_dual_norm(cs, metric, cp, rhs, 0.0, ctx.aux_counter);
            add_dual_norm(cs, metric, cm, rhs, 0.0, ctx.aux_counter);
        }
    } else if (r == 0) {
        // Unbounded features: both per-sample duals collapse to ||w||_* <= lambda.
        std::vector<AffineComp> comps(static_cast<size_t>(ctx.n));
        for (int j = 0; j < ctx.n; ++j)
            comps[static_cast<size_t>(j)] = {{{ctx.i_w + j, 1.0}}, 0.0};
        add_dual_norm(cs, metric, comps, rhs, 0.0, ctx.aux_counter);
    } else {
        for (int i = 0; i < ctx.N; ++i) {
            const double y = ctx.client.samples[i].y;
            for (int sign = 0; sign < 2; ++sign) {
                const int i_phi = sign == 0 ? i_phip : i_phim;
                const double ys = sign == 0 ? y : -y;
                std::vector<AffineComp> comps(static_cast<size_t>(ctx.n));
                for (int j = 0; j < ctx.n; ++j) {
                    LinExpr e = {{ctx.i_w + j, ys}};
                    for (int k = 0; k < r; ++k)
                        if (P.C(k, j) != 0.0) e.push_back({i_phi + i * r + k, P.C(k, j)});
                    comps[static_cast<size_t>(j)] = {std::move(e), 0.0};
                }
                add_dual_norm(cs, metric, comps, rhs, 0.0, ctx.aux_counter);
            }
        }
    }
    return cs;
}

// Smooth hinge epigraph pair per sample; phi is the free smoothing point and
// pi its nonnegative hinge value.
ConstraintSystem build_smooth_hinge(const LossSpec& loss, const SupportSpec& support, double kappa,
                                    NormKind metric, const ClientDataset& client) {
    checked_epsilon(loss);
    if (support.kind != SupportKind::unbounded) unsupported_pair(loss, support);
    ConstraintSystem cs;
    OmegaContext ctx = begin_system(cs, client, -kInf);
    const int i_phip = cs.add_var("phi_plus", ctx.N);
    const int i_phim = cs.add_var("phi_minus", ctx.N);
    const int i_pip = cs.add_var("pi_plus", ctx.N, 0.0, kInf);
    const int i_pim = cs.add_var("pi_minus", ctx.N, 0.0, kInf);
    for (int i = 0; i < ctx.N; ++i) {
        const Sample& s = ctx.client.samples[i];
        // 1/2 (phi+ - y <w, x>)^2 + pi+ <= alpha
        QuadRow qp;
        qp.a = w_expr(ctx, s.x, -s.y);
        qp.a.push_back({i_phip + i, 1.0});
        qp.c = {{i_pip + i, 1.0}, {ctx.i_alpha + i, -1.0}};
        cs.quad.push_back(std::move(qp));
        cs.n_epigraph_rows += 1;
        // 1/2 (phi- + y <w, x>)^2 + pi- - kappa lambda <= alpha
        QuadRow qm;
        qm.a = w_expr(ctx, s.x, s.y);
        qm.a.push_back({i_phim + i, 1.0});
        qm.c = {{i_pim + i, 1.0}, {ctx.i_lambda, -kappa}, {ctx.i_alpha + i, -1.0}};
        cs.quad.push_back(std::move(qm));
        cs.n_epigraph_rows += 1;
        // 1 - phi <= pi
        cs.add_le({{i_phip + i, -1.0}, {i_pip + i, -1.0}}, -1.0);
        cs.add_le({{i_phim + i, -1.0}, {i_pim + i, -1.0}}, -1.0);
    }
    std::vector<AffineComp> comps(static_cast<size_t>(ctx.n));
    for (int j = 0; j < ctx.n; ++j) comps[static_cast<size_t>(j)] = {{{ctx.i_w + j, 1.0}}, 0.0};
    add_dual_norm(cs, metric, comps, {{ctx.i_lambda, 1.0}}, 0.0, ctx.aux_counter);
    return cs;
}

ConstraintSystem build_logistic(const LossSpec& loss, const SupportSpec& support, double kappa,
                                NormKind metric, const ClientDataset& client) {
    checked_epsilon(loss);
    if (support.kind != SupportKind::unbounded) unsupported_pair(loss, support);
    ConstraintSystem cs;
    OmegaContext ctx = begin_system(cs, client, -kInf);
    for (int i = 0; i < ctx.N; ++i) {
        const Sample& s = ctx.client.samples[i];
        LseRow up;
        up.a = w_expr(ctx, s.x, -s.y);
        up.c = {{ctx.i_alpha + i, -1.0}};
        cs.lse.push_back(std::move(up));
        LseRow dn;
        dn.a = w_expr(ctx, s.x, s.y);
        dn.c = {{ctx.i_lambda, -kappa}, {ctx.i_alpha + i, -1.0}};
        cs.lse.push_back(std::move(dn));
        cs.n_epigraph_rows += 2;
    }
    std::vector<AffineComp> comps(static_cast<size_t>(ctx.n));
    for (int j = 0; j < ctx.n; ++j) comps[static_cast<size_t>(j)] = {{{ctx.i_w + j, 1.0}}, 0.0};
    add_dual_norm(cs, metric, comps, {{ctx.i_lambda, 1.0}}, 0.0, ctx.aux_counter);
    return cs;
}

}  // namespace

ConstraintSystem build_omega(const LossSpec& loss, const SupportSpec& support, double kappa,
                             NormKind metric_norm, const ClientDataset& client) {
    if (kappa <= 0.0) throw std::invalid_argument("kappa must be positive");
    switch (loss.family) {
        case LossFamily::huber:
            return build_huber(loss, support, kappa, metric_norm, client);
        case LossFamily::svr:
        case LossFamily::quantile:
            return build_regression_polyhedral(loss, support, kappa, metric_norm, client);
        case LossFamily::hinge:
            return build_hinge(loss, support, kappa, metric_norm, client);
        case LossFamily::smooth_hinge:
            return build_smooth_hinge(loss, support, kappa, metric_norm, client);
        case LossFamily::logistic:
            return build_logistic(loss, support, kappa, metric_norm, client);
    }
    throw std::logic_error("build_omega: unknown loss family");
}

ConstraintSystem build_empirical_epigraph(const LossSpec& loss, const ClientDataset& client) {
    const double eps = checked_epsilon(loss);
    ConstraintSystem cs;
    const bool alpha_nonneg = loss.family == LossFamily::svr ||
                              loss.family == LossFamily::quantile ||
                              loss.family == LossFamily::hinge;
    OmegaContext ctx = begin_system(cs, client, alpha_nonneg ? 0.0 : -kInf);
    cs.set_bounds(ctx.i_lambda, 0.0, 0.0);

    switch (loss.family) {
        case LossFamily::huber: {
            const int i_mu = cs.add_var("mu", ctx.N);
            const int i_t = cs.add_var("t", ctx.N, 0.0, kInf);
            add_huber_epigraph(cs, ctx, eps, i_mu, i_t);
            return cs;
        }
        case LossFamily::svr:
        case LossFamily::quantile: {
            const bool is_svr = loss.family == LossFamily::svr;
            const double scale_up = is_svr ? 1.0 : eps;
            const double scale_dn = is_svr ? 1.0 : 1.0 - eps;
            const double slack = is_svr ? eps : 0.0;
            for (int i = 0; i < ctx.N; ++i) {
                const Sample& s = ctx.client.samples[i];
                LinExpr up = w_expr(ctx, s.x, -scale_up);
                up.push_back({ctx.i_alpha + i, -1.0});
                cs.add_le(std::move(up), slack - scale_up * s.y);
                LinExpr dn = w_expr(ctx, s.x, scale_dn);
                dn.push_back({ctx.i_alpha + i, -1.0});
                cs.add_le(std::move(dn), slack + scale_dn * s.y);
                cs.n_epigraph_rows += 2;
            }
            return cs;
        }
        case LossFamily::hinge: {
            for (int i = 0; i < ctx.N; ++i) {
                const Sample& s = ctx.client.samples[i];
                LinExpr row = w_expr(ctx, s.x, -s.y);
                row.push_back({ctx.i_alpha + i, -1.0});
                cs.add_le(std::move(row), -1.0);
                cs.n_epigraph_rows += 1;
            }
            return cs;
        }
        case LossFamily::smooth_hinge: {
            const int i_phi = cs.add_var("phi", ctx.N);
            const int i_pi = cs.add_var("pi", ctx.N, 0.0, kInf);
            for (int i = 0; i < ctx.N; ++i) {
                const Sample& s = ctx.client.samples[i];
                QuadRow q;
                q.a = w_expr(ctx, s.x, -s.y);
                q.a.push_back({i_phi + i, 1.0});
                q.c = {{i_pi + i, 1.0}, {ctx.i_alpha + i, -1.0}};
                cs.quad.push_back(std::move(q));
                cs.add_le({{i_phi + i, -1.0}, {i_pi + i, -1.0}}, -1.0);
                cs.n_epigraph_rows += 1;
            }
            return cs;
        }
        case LossFamily::logistic: {
            for (int i = 0; i < ctx.N; ++i) {
                const Sample& s = ctx.client.samples[i];
                LseRow row;
                row.a = w_expr(ctx, s.x, -s.y);
                row.c = {{ctx.i_alpha + i, -1.0}};
                cs.lse.push_back(std::move(row));
                cs.n_epigraph_rows += 1;
            }
            return cs;
        }
    }
    throw std::logic_error("build_empirical_epigraph: unknown loss family");
}

double worst_case_client_loss(const Vec& w, const ClientDataset& client, double rho, double kappa,
                              NormKind metric_norm, const LossSpec& loss,
                              const SupportSpec& support, double tol) {
    if (client.size() == 0) throw std::invalid_argument("worst_case_client_loss: client has no samples");
    if (w.size() != client.dim())
        throw std::invalid_argument("worst_case_client_loss: dimension mismatch");
    if (rho < 0.0) throw std::invalid_argument("rho must be nonnegative");
    if (rho == 0.0) return empirical_loss(loss, w, client);

    ConvexProgram prog;
    prog.cs = build_omega(loss, support, kappa, metric_norm, client);
    const int i_w = prog.cs.layout.index("w");
    for (int j = 0; j < w.size(); ++j) prog.cs.set_bounds(i_w + j, w[j], w[j]);
    const int nv = prog.cs.num_vars();
    prog.P.resize(nv, nv);
    prog.q = Vec::Zero(nv);
    prog.q[prog.cs.layout.index("lambda")] = rho;
    const int i_alpha = prog.cs.layout.index("alpha");
    const int N = client.size();
    for (int i = 0; i < N; ++i) prog.q[i_alpha + i] = 1.0 / static_cast<double>(N);
    const SolveResult res = solve_convex(prog, tol);
    ensure_solved(res, "worst_case_client_loss");
    return res.objective;
}

double worst_case_client_loss(const Vec& w, const ClientDataset& client, const RobustnessSpec& rob,
                              int client_index, const LossSpec& loss, const SupportSpec& support,
                              double tol) {
    if (client_index < 0 || client_index >= rob.rho.size())
        throw std::invalid_argument("worst_case_client_loss: client index out of range");
    return worst_case_client_loss(w, client, rob.rho[client_index], rob.kappa, rob.metric_norm,
                                  loss, support, tol);
}

}  // namespace drfl
