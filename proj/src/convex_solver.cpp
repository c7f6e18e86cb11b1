#include "drfl/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace drfl {

namespace {

constexpr double kMuInit = 10.0;
constexpr double kMuGrow = 5.0;
constexpr double kMuMax = 1e8;
constexpr double kViolDropTarget = 0.25;
constexpr int kMaxOuter = 120;
constexpr int kMaxInner = 10000;
constexpr double kStallLevel = 1e-3;
constexpr int kStallOuters = 8;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

struct AlmEngine::Impl {
    int n = 0;
    SpMat P;
    Vec q;
    double r0 = 0.0;
    Vec lb, ub;
    double tol = 1e-7;

    // Linear rows split by kind; nonlinear rows kept as tagged evaluators.
    SpMat Aeq;
    Vec beq;
    SpMat Ain;  // g = Ain x - bin <= 0
    Vec bin;
    std::vector<QuadRow> quad;
    std::vector<LseRow> lse;
    std::vector<SocRow> soc;
    int m_eq = 0, m_lin = 0, m_nl = 0;

    // Multiplier memory.
    Vec y_eq, y_in;  // y_in covers linear inequalities then quad, lse, soc
    double mu = kMuInit;
    Vec x;
    double L_est = 1.0;  // running local Lipschitz estimate

    ConstraintSystem cs_copy;  // for final violation reporting

    void assemble(const ConvexProgram& prog);
    double eval(const Vec& v, Vec* grad) const;
    double inner_fista(double inner_tol);
    double violation(const Vec& v) const;
    double comp_gap(const Vec& v) const;
    double stat_eps(const Vec& v) const;
    SolveResult run();
};

void AlmEngine::Impl::assemble(const ConvexProgram& prog) {
    const ConstraintSystem& cs = prog.cs;
    cs_copy = cs;
    n = cs.num_vars();
    q = prog.q.size() ? prog.q : Vec::Zero(n);
    if (q.size() != n) throw std::invalid_argument("alm engine: cost dimension mismatch");
    r0 = prog.r0;
    if (prog.P.rows() == 0) {
        P = SpMat(n, n);
    } else {
        if (prog.P.rows() != n || prog.P.cols() != n)
            throw std::invalid_argument("alm engine: P dimension mismatch");
        P = prog.P;
    }
    lb = cs.lb;
    ub = cs.ub;

    std::vector<Triplet> te, ti;
    std::vector<double> be, bi;
    for (const LinRow& r : cs.lin) {
        const bool eq = std::isfinite(r.lo) && r.lo == r.hi;
        if (eq) {
            for (const LinTerm& t : r.a) te.emplace_back(static_cast<int>(be.size()), t.idx, t.coef);
            be.push_back(r.lo);
            continue;
        }
        if (std::isfinite(r.hi)) {
            for (const LinTerm& t : r.a) ti.emplace_back(static_cast<int>(bi.size()), t.idx, t.coef);
            bi.push_back(r.hi);
        }
        if (std::isfinite(r.lo)) {
            for (const LinTerm& t : r.a) ti.emplace_back(static_cast<int>(bi.size()), t.idx, -t.coef);
            bi.push_back(-r.lo);
        }
    }
    m_eq = static_cast<int>(be.size());
    m_lin = static_cast<int>(bi.size());
    Aeq = SpMat(m_eq, n);
    Aeq.setFromTriplets(te.begin(), te.end());
    beq = m_eq ? Eigen::Map<const Vec>(be.data(), m_eq) : Vec(0);
    Ain = SpMat(m_lin, n);
    Ain.setFromTriplets(ti.begin(), ti.end());
    bin = m_lin ? Eigen::Map<const Vec>(bi.data(), m_lin) : Vec(0);
    quad = cs.quad;
    lse = cs.lse;
    soc = cs.soc;
    m_nl = static_cast<int>(quad.size() + lse.size() + soc.size());

    y_eq = Vec::Zero(m_eq);
    y_in = Vec::Zero(m_lin + m_nl);
    mu = kMuInit;
    x = Vec::Zero(n).cwiseMax(lb).cwiseMin(ub);
    if (prog.warm_x.size() == n) x = prog.warm_x.cwiseMax(lb).cwiseMin(ub);
}

// Augmented Lagrangian value and (optionally) gradient at v.
double AlmEngine::Impl::eval(const Vec& v, Vec* grad) const {
    const Vec Pv = P * v;
    double val = 0.5 * v.dot(Pv) + q.dot(v);
    if (grad) *grad = Pv + q;

    if (m_eq) {
        const Vec h = Aeq * v - beq;
        const Vec w = y_eq + mu * h;
        val += y_eq.dot(h) + 0.5 * mu * h.squaredNorm();
        if (grad) *grad += Aeq.transpose() * w;
    }
    if (m_lin) {
        const Vec g = Ain * v - bin;
        const Vec w = (y_in.head(m_lin) + mu * g).cwiseMax(0.0);
        val += (w.squaredNorm() - y_in.head(m_lin).squaredNorm()) / (2.0 * mu);
        if (grad) *grad += Ain.transpose() * w;
    }
    int yi = m_lin;
    for (const QuadRow& r : quad) {
        const double t = eval_expr(r.a, v) + r.a0;
        const double g = 0.5 * t * t + eval_expr(r.c, v) + r.c0;
        const double w = std::max(0.0, y_in[yi] + mu * g);
        val += (w * w - y_in[yi] * y_in[yi]) / (2.0 * mu);
        if (grad && w > 0.0) {
            for (const LinTerm& lt : r.a) (*grad)[lt.idx] += w * t * lt.coef;
            for (const LinTerm& lt : r.c) (*grad)[lt.idx] += w * lt.coef;
        }
        ++yi;
    }
    for (const LseRow& r : lse) {
        const double t = eval_expr(r.a, v) + r.a0;
        const double g = eval_lse_row(r, v);
        const double w = std::max(0.0, y_in[yi] + mu * g);
        val += (w * w - y_in[yi] * y_in[yi]) / (2.0 * mu);
        if (grad && w > 0.0) {
            const double s = sigmoid(t);
            for (const LinTerm& lt : r.a) (*grad)[lt.idx] += w * s * lt.coef;
            for (const LinTerm& lt : r.c) (*grad)[lt.idx] += w * lt.coef;
        }
        ++yi;
    }
    for (const SocRow& r : soc) {
        double nrm2 = 0.0;
        std::vector<double> uvals(r.u.size());
        for (size_t k = 0; k < r.u.size(); ++k) {
            uvals[k] = eval_expr(r.u[k].first, v) + r.u[k].second;
            nrm2 += uvals[k] * uvals[k];
        }
        const double nrm = std::sqrt(nrm2);
        const double g = nrm - (eval_expr(r.c, v) + r.c0);
        const double w = std::max(0.0, y_in[yi] + mu * g);
        val += (w * w - y_in[yi] * y_in[yi]) / (2.0 * mu);
        if (grad && w > 0.0) {
            if (nrm > 1e-12) {
                for (size_t k = 0; k < r.u.size(); ++k) {
                    const double s = w * uvals[k] / nrm;
                    for (const LinTerm& lt : r.u[k].first) (*grad)[lt.idx] += s * lt.coef;
                }
            }
            for (const LinTerm& lt : r.c) (*grad)[lt.idx] -= w * lt.coef;
        }
        ++yi;
    }
    return val;
}

double AlmEngine::Impl::violation(const Vec& v) const {
    double viol = 0.0;
    if (m_eq) viol = std::max(viol, inf_norm(Aeq * v - beq));
    if (m_lin) viol = std::max(viol, (Ain * v - bin).maxCoeff());
    for (const QuadRow& r : quad) viol = std::max(viol, eval_quad_row(r, v));
    for (const LseRow& r : lse) viol = std::max(viol, eval_lse_row(r, v));
    for (const SocRow& r : soc) viol = std::max(viol, eval_soc_row(r, v));
    return std::max(viol, 0.0);
}

// Worst complementarity product |y_i g_i(v)| over the inequality rows. The
// stationarity and feasibility checks alone can both pass one multiplier
// update early, with slack rows still carrying weight; the product is what
// bounds the resulting objective gap.
double AlmEngine::Impl::comp_gap(const Vec& v) const {
    double comp = 0.0;
    if (m_lin) {
        const Vec g = Ain * v - bin;
        for (int i = 0; i < m_lin; ++i) comp = std::max(comp, std::abs(y_in[i] * g[i]));
    }
    int yi = m_lin;
    for (const QuadRow& r : quad) comp = std::max(comp, std::abs(y_in[yi++] * eval_quad_row(r, v)));
    for (const LseRow& r : lse) comp = std::max(comp, std::abs(y_in[yi++] * eval_lse_row(r, v)));
    for (const SocRow& r : soc) comp = std::max(comp, std::abs(y_in[yi++] * eval_soc_row(r, v)));
    return comp;
}

// Acceptable stationarity residual at v: absolute floor plus a term relative
// to the gradient pieces actually in play (objective slope and weighted
// constraint slopes), so the test scales with the problem instead of
// demanding fixed absolute accuracy from a first-order inner loop.
double AlmEngine::Impl::stat_eps(const Vec& v) const {
    Vec grad;
    eval(v, &grad);
    const Vec base = P * v + q;
    const double d_sc = std::max(inf_norm(base), inf_norm(grad - base));
    return tol + tol * d_sc;
}

// Accelerated projected-gradient inner solve; returns the final gradient
// mapping norm. Runs in two phases: FISTA with value-based backtracking for
// globalization, then gradient-only fixed-step descent once function
// differences drop below floating-point resolution (value comparisons are
// noise there, but the gradient itself stays accurate).
double AlmEngine::Impl::inner_fista(double inner_tol) {
    double& L = L_est;
    Vec v = x, xk = x, grad(n);
    double t = 1.0;
    double f_prev = kInf;
    double gmap = kInf;
    int noisy = 0;
    for (int it = 0; it < kMaxInner; ++it) {
        const double fv = eval(v, &grad);
        Vec xn;
        double fn;
        for (;;) {
            xn = (v - grad / L).cwiseMax(lb).cwiseMin(ub);
            fn = eval(xn, nullptr);
            const Vec d = xn - v;
            if (fn <= fv + grad.dot(d) + 0.5 * L * d.squaredNorm() + 1e-12 * (1.0 + std::abs(fv))) break;
            L *= 2.0;
            if (L > 1e16) break;
        }
        gmap = L * inf_norm(v - xn);
        if (gmap <= inner_tol) {
            xk = xn;
            x = xk;
            return gmap;
        }
        // Predicted decrease below evaluation noise: switch to phase two.
        const Vec d = xn - v;
        if (-(grad.dot(d) + 0.5 * L * d.squaredNorm()) < 64.0 * 2.2e-16 * (1.0 + std::abs(fv))) {
            if (++noisy >= 3) {
                xk = xn;
                break;
            }
        } else {
            noisy = 0;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        Vec vn = xn + ((t - 1.0) / tn) * (xn - xk);
        if (fn > f_prev) {  // function restart
            vn = xn;
            t = 1.0;
        } else {
            t = tn;
        }
        v = vn.cwiseMax(lb).cwiseMin(ub);
        xk = xn;
        f_prev = fn;
        L = std::max(1e-6, L * 0.97);
    }

    // Phase two: plain projected gradient at frozen step, tracking the best
    // iterate by gradient mapping.
    v = xk;
    Vec best_x = xk;
    double best_g = gmap;
    int since_best = 0, worse = 0;
    for (int it = 0; it < 4000; ++it) {
        eval(v, &grad);
        const Vec xn = (v - grad / L).cwiseMax(lb).cwiseMin(ub);
        gmap = L * inf_norm(v - xn);
        if (gmap < best_g) {
            best_g = gmap;
            best_x = xn;
            since_best = 0;
        } else if (++since_best > 60) {
            break;
        }
        if (gmap > 2.0 * best_g) {
            if (++worse > 20) {  // step too long for the local curvature
                L *= 2.0;
                worse = 0;
                v = best_x;
                continue;
            }
        } else {
            worse = 0;
        }
        if (gmap <= inner_tol) {
            best_x = xn;
            best_g = gmap;
            break;
        }
        v = xn;
    }
    x = best_x;
    return best_g;
}

SolveResult AlmEngine::Impl::run() {
    SolveResult res;
    const double stat_scale = std::max(1.0, inf_norm(q));
    const double tol_stat = tol * stat_scale;
    double inner_tol = std::max(1e-2 * stat_scale, tol_stat);
    double viol_prev = kInf;
    int stall = 0;
    double gmap = kInf;
    int total_outer = 0;
    for (int outer = 0; outer < kMaxOuter; ++outer) {
        total_outer = outer + 1;
        gmap = inner_fista(inner_tol);
        const double viol = violation(x);
        if (viol <= tol && gmap <= stat_eps(x) &&
            comp_gap(x) <= tol * std::max(1.0, inf_norm(y_in)))
            break;

        // Multiplier updates at the current penalty.
        if (m_eq) y_eq += mu * (Aeq * x - beq);
        if (m_lin) y_in.head(m_lin) = (y_in.head(m_lin) + mu * (Ain * x - bin)).cwiseMax(0.0);
        int yi = m_lin;
        for (const QuadRow& r : quad) {
            y_in[yi] = std::max(0.0, y_in[yi] + mu * eval_quad_row(r, x));
            ++yi;
        }
        for (const LseRow& r : lse) {
            y_in[yi] = std::max(0.0, y_in[yi] + mu * eval_lse_row(r, x));
            ++yi;
        }
        for (const SocRow& r : soc) {
            y_in[yi] = std::max(0.0, y_in[yi] + mu * eval_soc_row(r, x));
            ++yi;
        }
        // Stiffen only while the violation is both meaningful and not
        // falling fast enough; a converged-but-uncertified iterate gains
        // nothing from a harder subproblem.
        if (viol > 0.5 * tol && viol > kViolDropTarget * viol_prev) mu = std::min(mu * kMuGrow, kMuMax);
        if (mu >= kMuMax && viol > kStallLevel && viol > 0.99 * viol_prev) {
            if (++stall >= kStallOuters) {
                res.x = x;
                res.y = Vec(m_eq + m_lin + m_nl);
                res.y << y_eq, y_in;
                res.primal_res = cs_copy.max_violation(x);
                res.dual_res = gmap;
                res.iterations = total_outer;
                res.status = SolveStatus::infeasible;
                res.objective = 0.5 * x.dot(P * x) + q.dot(x) + r0;
                return res;
            }
        } else {
            stall = 0;
        }
        viol_prev = viol;
        inner_tol = std::max(tol_stat, std::min(0.3 * inner_tol, 0.3 * viol));
    }
    res.x = x;
    res.y = Vec(m_eq + m_lin + m_nl);
    if (res.y.size()) res.y << y_eq, y_in;
    res.primal_res = cs_copy.max_violation(x);
    res.dual_res = gmap;
    res.iterations = total_outer;
    res.status = (res.primal_res <= tol && gmap <= stat_eps(x) &&
                  comp_gap(x) <= tol * std::max(1.0, inf_norm(y_in)))
                     ? SolveStatus::optimal
                     : SolveStatus::max_iters;
    res.objective = 0.5 * x.dot(P * x) + q.dot(x) + r0;
    return res;
}

AlmEngine::AlmEngine() : impl_(std::make_unique<Impl>()) {}
AlmEngine::~AlmEngine() = default;
AlmEngine::AlmEngine(AlmEngine&&) noexcept = default;
AlmEngine& AlmEngine::operator=(AlmEngine&&) noexcept = default;

void AlmEngine::setup(const ConvexProgram& prog, double tol) {
    impl_->tol = tol;
    impl_->assemble(prog);
}

void AlmEngine::update_cost(const Vec& q, double r0) {
    if (q.size() != impl_->n) throw std::invalid_argument("alm engine: cost dimension mismatch");
    impl_->q = q;
    impl_->r0 = r0;
}

void AlmEngine::warm_start(const Vec& x) {
    if (x.size() != impl_->n) throw std::invalid_argument("alm engine: warm start dimension mismatch");
    impl_->x = x.cwiseMax(impl_->lb).cwiseMin(impl_->ub);
}

SolveResult AlmEngine::solve() { return impl_->run(); }

SolveResult solve_convex(const ConvexProgram& prog, double tol) {
    if (!prog.cs.has_nonlinear()) return solve_qp(prog, tol);
    AlmEngine eng;
    eng.setup(prog, tol);
    return eng.solve();
}

}  // namespace drfl
