#include "drfl/inner_solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace drfl {

namespace {

constexpr double kRhoEqScale = 1e3;   // equality rows get a stiffer penalty
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRelax = 1.6;
constexpr double kSigma = 1e-6;
constexpr int kCheckEvery = 25;
constexpr int kMaxIters = 200000;
constexpr int kRuizIters = 10;
constexpr double kPolishDelta = 1e-8;
constexpr int kPolishRefine = 3;
// The active-set refit is attempted once the iterates are moderately close
// (relative residual triggers below) and at a fixed cadence as a fallback;
// a verified refit terminates the run early.
constexpr double kPolishTriggerP = 1e-3;
constexpr double kPolishTriggerD = 5e-2;
constexpr int kPolishEvery = 100;
constexpr int kRhoEvery = 100;
// Relative tolerance for the Farkas certificate built from the dual step.
constexpr double kInfeasTol = 1e-5;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

struct QpEngine::Impl {
    // Original data.
    int n = 0;
    int m = 0;  // linear rows + singleton bound rows
    SpMat P;    // n x n, upper+lower stored
    Vec q;
    double r0 = 0.0;
    SpMat A;  // m x n
    Eigen::SparseMatrix<double, Eigen::RowMajor> A_rm;  // row view for polish
    Vec l, u;
    std::vector<bool> is_eq;
    double tol = 1e-7;

    // Scaling: x = D xs, z = E^{-1} zs, y = E ys / cost_scale.
    Vec D, E;
    double cost_scale = 1.0;
    SpMat Ps;  // scaled
    Vec qs;
    SpMat As;
    Vec ls, us;

    // Splitting state (scaled space).
    Vec xs, zs, ys;
    double rho_bar = 0.1;
    Vec rho;  // per row
    Eigen::SimplicialLDLT<SpMat> kkt;
    bool kkt_analyzed = false;

    // Polish cache: keyed on the per-row activity signature.
    std::vector<int8_t> polish_sig;
    SpMat polish_act;                                   // active rows of A
    Vec polish_rhs_b;                                   // active-row targets
    std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> polish_kkt;

    void assemble(const ConvexProgram& prog);
    void scale();
    void factor();
    void adapt_rho(double rp, double rd, double p_sc, double d_sc);
    bool polish(SolveResult& res);
    SolveResult run();
};

void QpEngine::Impl::assemble(const ConvexProgram& prog) {
    const ConstraintSystem& cs = prog.cs;
    n = cs.num_vars();
    if (cs.has_nonlinear()) throw std::invalid_argument("qp engine: program has nonlinear rows");
    q = prog.q.size() ? prog.q : Vec::Zero(n);
    if (q.size() != n) throw std::invalid_argument("qp engine: cost dimension mismatch");
    r0 = prog.r0;
    if (prog.P.rows() == 0) {
        P = SpMat(n, n);
    } else {
        if (prog.P.rows() != n || prog.P.cols() != n)
            throw std::invalid_argument("qp engine: P dimension mismatch");
        P = prog.P;
    }
    P.makeCompressed();

    std::vector<Triplet> trips;
    std::vector<double> lo, hi;
    std::vector<bool> eqf;
    int row = 0;
    for (const LinRow& r : cs.lin) {
        for (const LinTerm& t : r.a) trips.emplace_back(row, t.idx, t.coef);
        lo.push_back(r.lo);
        hi.push_back(r.hi);
        eqf.push_back(std::isfinite(r.lo) && r.lo == r.hi);
        ++row;
    }
    for (int j = 0; j < n; ++j) {
        const bool lb = std::isfinite(cs.lb[j]), ub = std::isfinite(cs.ub[j]);
        if (!lb && !ub) continue;
        trips.emplace_back(row, j, 1.0);
        lo.push_back(lb ? cs.lb[j] : -kInf);
        hi.push_back(ub ? cs.ub[j] : kInf);
        eqf.push_back(lb && ub && cs.lb[j] == cs.ub[j]);
        ++row;
    }
    m = row;
    A = SpMat(m, n);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    A_rm = A;
    l = Eigen::Map<const Vec>(lo.data(), m);
    u = Eigen::Map<const Vec>(hi.data(), m);
    is_eq = std::move(eqf);
}

void QpEngine::Impl::scale() {
    D = Vec::Ones(n);
    E = Vec::Ones(m);
    cost_scale = 1.0;
    Ps = P;
    qs = q;
    As = A;

    Vec dcol(n), erow(m);
    for (int pass = 0; pass < kRuizIters; ++pass) {
        dcol.setZero();
        erow.setZero();
        for (int k = 0; k < Ps.outerSize(); ++k)
            for (SpMat::InnerIterator it(Ps, k); it; ++it)
                dcol[it.col()] = std::max(dcol[it.col()], std::abs(it.value()));
        for (int k = 0; k < As.outerSize(); ++k)
            for (SpMat::InnerIterator it(As, k); it; ++it) {
                const double a = std::abs(it.value());
                dcol[it.col()] = std::max(dcol[it.col()], a);
                erow[it.row()] = std::max(erow[it.row()], a);
            }
        for (int j = 0; j < n; ++j) dcol[j] = dcol[j] > 1e-12 ? 1.0 / std::sqrt(dcol[j]) : 1.0;
        for (int i = 0; i < m; ++i) erow[i] = erow[i] > 1e-12 ? 1.0 / std::sqrt(erow[i]) : 1.0;
        // Apply the pass: Ps <- Dc Ps Dc, As <- Er As Dc.
        for (int k = 0; k < Ps.outerSize(); ++k)
            for (SpMat::InnerIterator it(Ps, k); it; ++it)
                it.valueRef() *= dcol[it.row()] * dcol[it.col()];
        for (int k = 0; k < As.outerSize(); ++k)
            for (SpMat::InnerIterator it(As, k); it; ++it)
                it.valueRef() *= erow[it.row()] * dcol[it.col()];
        D = D.cwiseProduct(dcol);
        E = E.cwiseProduct(erow);
    }
    qs = D.cwiseProduct(q);
    // Cost scaling keeps the objective terms on the same footing as the rows.
    double pnorm = 0.0;
    if (Ps.nonZeros() > 0) {
        Vec colmax = Vec::Zero(n);
        for (int k = 0; k < Ps.outerSize(); ++k)
            for (SpMat::InnerIterator it(Ps, k); it; ++it)
                colmax[it.col()] = std::max(colmax[it.col()], std::abs(it.value()));
        pnorm = colmax.mean();
    }
    const double qn = inf_norm(qs);
    const double denom = std::max(pnorm, qn);
    cost_scale = denom > 1e-12 ? 1.0 / denom : 1.0;
    Ps = Ps * cost_scale;
    qs *= cost_scale;
    ls = E.cwiseProduct(l).cwiseMax(-kInf);
    us = E.cwiseProduct(u).cwiseMin(kInf);
    for (int i = 0; i < m; ++i) {  // keep infinities exact under scaling
        if (!std::isfinite(l[i])) ls[i] = -kInf;
        if (!std::isfinite(u[i])) us[i] = kInf;
    }
}

void QpEngine::Impl::factor() {
    rho = Vec::Constant(m, rho_bar);
    for (int i = 0; i < m; ++i)
        if (is_eq[i]) rho[i] = std::min(kRhoEqScale * rho_bar, kRhoMax);
    std::vector<Triplet> trips;
    trips.reserve(Ps.nonZeros() + As.nonZeros() + n + m);
    for (int k = 0; k < Ps.outerSize(); ++k)
        for (SpMat::InnerIterator it(Ps, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, kSigma);
    for (int k = 0; k < As.outerSize(); ++k)
        for (SpMat::InnerIterator it(As, k); it; ++it) {
            trips.emplace_back(n + it.row(), it.col(), it.value());
            trips.emplace_back(it.col(), n + it.row(), it.value());
        }
    for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho[i]);
    SpMat K(n + m, n + m);
    K.setFromTriplets(trips.begin(), trips.end());
    K.makeCompressed();
    if (!kkt_analyzed) {
        kkt.analyzePattern(K);
        kkt_analyzed = true;
    }
    kkt.factorize(K);
    if (kkt.info() != Eigen::Success) throw std::runtime_error("qp engine: KKT factorization failed");
}

void QpEngine::Impl::adapt_rho(double rp, double rd, double p_sc, double d_sc) {
    const double pr = rp / std::max(p_sc, 1e-10);
    const double dr = rd / std::max(d_sc, 1e-10);
    const double ratio = std::sqrt(pr / std::max(dr, 1e-16));
    if (ratio > 5.0 || ratio < 0.2) {
        rho_bar = std::clamp(rho_bar * ratio, kRhoMin, kRhoMax);
        factor();
    }
}

bool QpEngine::Impl::polish(SolveResult& res) {
    // Activity signature from multiplier signs; equality rows always active.
    std::vector<int8_t> sig(m, 0);
    int m_act = 0;
    for (int i = 0; i < m; ++i) {
        if (is_eq[i]) sig[i] = 2;
        else if (res.y[i] < 0 && std::isfinite(l[i])) sig[i] = -1;
        else if (res.y[i] > 0 && std::isfinite(u[i])) sig[i] = 1;
        if (sig[i] != 0) ++m_act;
    }
    if (sig != polish_sig || !polish_kkt) {
        polish_sig = sig;
        std::vector<Triplet> at;
        std::vector<double> bt;
        int r = 0;
        for (int i = 0; i < m; ++i) {
            if (sig[i] == 0) continue;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A_rm, i); it; ++it)
                at.emplace_back(r, it.col(), it.value());
            bt.push_back(sig[i] == -1 ? l[i] : u[i]);
            ++r;
        }
        polish_act = SpMat(m_act, n);
        polish_act.setFromTriplets(at.begin(), at.end());
        polish_act.makeCompressed();
        polish_rhs_b = Eigen::Map<const Vec>(bt.data(), m_act);

        std::vector<Triplet> kt;
        for (int k = 0; k < P.outerSize(); ++k)
            for (SpMat::InnerIterator it(P, k); it; ++it) kt.emplace_back(it.row(), it.col(), it.value());
        for (int j = 0; j < n; ++j) kt.emplace_back(j, j, kPolishDelta);
        for (int k = 0; k < polish_act.outerSize(); ++k)
            for (SpMat::InnerIterator it(polish_act, k); it; ++it) {
                kt.emplace_back(n + it.row(), it.col(), it.value());
                kt.emplace_back(it.col(), n + it.row(), it.value());
            }
        for (int i = 0; i < m_act; ++i) kt.emplace_back(n + i, n + i, -kPolishDelta);
        SpMat K(n + m_act, n + m_act);
        K.setFromTriplets(kt.begin(), kt.end());
        K.makeCompressed();
        polish_kkt = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
        polish_kkt->compute(K);
        if (polish_kkt->info() != Eigen::Success) {
            polish_kkt.reset();
            polish_sig.clear();
            return false;
        }
    } else {
        m_act = static_cast<int>(polish_act.rows());
    }

    Vec rhs(n + m_act);
    rhs.head(n) = -q;
    rhs.tail(m_act) = polish_rhs_b;
    Vec sol = polish_kkt->solve(rhs);
    for (int it = 0; it < kPolishRefine; ++it) {  // refine against the unregularized system
        Vec resid(n + m_act);
        resid.head(n) = rhs.head(n) - (P * sol.head(n)) - polish_act.transpose() * sol.tail(m_act);
        resid.tail(m_act) = rhs.tail(m_act) - polish_act * sol.head(n);
        sol += polish_kkt->solve(resid);
    }
    Vec x = sol.head(n);
    Vec y = Vec::Zero(m);
    {
        int r = 0;
        for (int i = 0; i < m; ++i)
            if (polish_sig[i] != 0) y[i] = sol[n + r++];
    }
    const Vec Ax = A * x;
    const Vec z = Ax.cwiseMax(l).cwiseMin(u);
    const Vec Px = P * x;
    const Vec Aty = A.transpose() * y;
    const double rp = inf_norm(Ax - z);
    const double rd = inf_norm(Px + q + Aty);
    // A refit is only trusted when each multiplier pushes against the bound
    // its row was pinned to; a sign violation means the activity guess
    // produced a stationary point of the wrong face.
    double sign_viol = 0.0;
    for (int i = 0; i < m; ++i) {
        if (polish_sig[i] == 1) sign_viol = std::max(sign_viol, -y[i]);
        else if (polish_sig[i] == -1) sign_viol = std::max(sign_viol, y[i]);
    }
    const double p_sc = std::max(inf_norm(Ax), inf_norm(z));
    const double d_sc = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(q)});
    const bool signs_ok = sign_viol <= tol + tol * d_sc;
    const bool at_tol = signs_ok && rp <= tol + tol * p_sc && rd <= tol + tol * d_sc;
    if (at_tol || (signs_ok && std::max(rp, rd) <= std::max(res.primal_res, res.dual_res))) {
        res.x = std::move(x);
        res.y = std::move(y);
        res.primal_res = rp;
        res.dual_res = rd;
    }
    return at_tol;
}

SolveResult QpEngine::Impl::run() {
    SolveResult res;
    if (m == 0) {  // unconstrained: a single regularized Newton solve
        Eigen::SimplicialLDLT<SpMat> chol;
        SpMat Preg = P;
        SpMat I(n, n);
        I.setIdentity();
        Preg = P + kPolishDelta * I;
        chol.compute(Preg);
        res.x = chol.solve(-q);
        res.y = Vec(0);
        res.iterations = 1;
        res.primal_res = 0.0;
        res.dual_res = inf_norm(P * res.x + q);
        res.status = res.dual_res <= tol ? SolveStatus::optimal : SolveStatus::max_iters;
        res.objective = 0.5 * res.x.dot(P * res.x) + q.dot(res.x) + r0;
        return res;
    }

    Vec rho_inv = rho.cwiseInverse();
    Vec ys_prev = ys;
    Vec rhs(n + m), sol(n + m);
    for (int k = 1; k <= kMaxIters; ++k) {
        const bool checking = k % kCheckEvery == 0 || k == kMaxIters;
        rhs.head(n) = kSigma * xs - qs;
        rhs.tail(m) = zs - ys.cwiseProduct(rho_inv);
        sol = kkt.solve(rhs);
        const auto xt = sol.head(n);
        const auto nu = sol.tail(m);
        const Vec zt = zs + (nu - ys).cwiseProduct(rho_inv);
        xs = kRelax * xt + (1.0 - kRelax) * xs;
        const Vec zc = kRelax * zt + (1.0 - kRelax) * zs + ys.cwiseProduct(rho_inv);
        zs = zc.cwiseMax(ls).cwiseMin(us);
        if (checking) ys_prev = ys;
        ys = rho.cwiseProduct(zc - zs);

        if (!checking) continue;

        // Unscaled residuals.
        const Vec x = D.cwiseProduct(xs);
        const Vec y = E.cwiseProduct(ys) / cost_scale;
        const Vec z = zs.cwiseQuotient(E);
        const Vec Ax = A * x;
        const Vec Px = P * x;
        const Vec Aty = A.transpose() * y;
        const double rp = inf_norm(Ax - z);
        const double rd = inf_norm(Px + q + Aty);
        const double p_sc = std::max(inf_norm(Ax), inf_norm(z));
        const double d_sc = std::max({inf_norm(Px), inf_norm(Aty), inf_norm(q)});
        const double eps_p = tol + tol * p_sc;
        const double eps_d = tol + tol * d_sc;
        res.iterations = k;
        const bool at_tol = rp <= eps_p && rd <= eps_d;
        // The refit is exact when the activity guess is right, so it is
        // attempted as soon as the iterates are moderately accurate (and at
        // a fixed cadence as a fallback); it only counts after verification.
        if (at_tol || k % kPolishEvery == 0 ||
            (rp <= kPolishTriggerP * (1.0 + p_sc) && rd <= kPolishTriggerD * (1.0 + d_sc))) {
            res.x = x;
            res.y = y;
            res.primal_res = rp;
            res.dual_res = rd;
            const bool refit_at_tol = polish(res);
            if (at_tol || refit_at_tol) {
                res.status = SolveStatus::optimal;
                res.objective = 0.5 * res.x.dot(P * res.x) + q.dot(res.x) + r0;
                return res;
            }
        }
        // Farkas-style certificate: a dual step along which A^T dy vanishes
        // while the constraint support function is negative proves there is
        // no feasible point.
        const Vec dy = E.cwiseProduct(ys - ys_prev) / cost_scale;
        const double dy_norm = inf_norm(dy);
        if (dy_norm > 1e-12 && inf_norm(A.transpose() * dy) <= kInfeasTol * dy_norm) {
            double support = 0.0;
            bool cert = true;
            for (int i = 0; i < m && cert; ++i) {
                const double dp = std::max(dy[i], 0.0);
                const double dm = std::min(dy[i], 0.0);
                if (dp > 0.0) {
                    if (std::isfinite(u[i])) support += u[i] * dp;
                    else if (dp > kInfeasTol * dy_norm) cert = false;
                }
                if (dm < 0.0) {
                    if (std::isfinite(l[i])) support += l[i] * dm;
                    else if (-dm > kInfeasTol * dy_norm) cert = false;
                }
            }
            if (cert && support <= -kInfeasTol * dy_norm) {
                res.x = x;
                res.y = y;
                res.primal_res = rp;
                res.dual_res = rd;
                res.status = SolveStatus::infeasible;
                res.objective = 0.5 * x.dot(Px) + q.dot(x) + r0;
                return res;
            }
        }
        if (k % kRhoEvery == 0 && k < kMaxIters / 2) {
            const double old = rho_bar;
            adapt_rho(rp, rd, p_sc, d_sc);
            if (rho_bar != old) rho_inv = rho.cwiseInverse();
        }
    }
    res.x = D.cwiseProduct(xs);
    res.y = E.cwiseProduct(ys) / cost_scale;
    {
        const Vec Ax = A * res.x;
        const Vec z = zs.cwiseQuotient(E);
        res.primal_res = inf_norm(Ax - z);
        res.dual_res = inf_norm(P * res.x + q + A.transpose() * res.y);
    }
    res.status = SolveStatus::max_iters;
    res.objective = 0.5 * res.x.dot(P * res.x) + q.dot(res.x) + r0;
    return res;
}

QpEngine::QpEngine() : impl_(std::make_unique<Impl>()) {}
QpEngine::~QpEngine() = default;
QpEngine::QpEngine(QpEngine&&) noexcept = default;
QpEngine& QpEngine::operator=(QpEngine&&) noexcept = default;

void QpEngine::setup(const ConvexProgram& prog, double tol) {
    impl_->tol = tol;
    impl_->assemble(prog);
    impl_->scale();
    impl_->rho_bar = 0.1;
    impl_->kkt_analyzed = false;
    impl_->polish_sig.clear();
    impl_->polish_kkt.reset();
    impl_->factor();
    impl_->xs = Vec::Zero(impl_->n);
    impl_->ys = Vec::Zero(impl_->m);
    impl_->zs = Vec::Zero(impl_->m).cwiseMax(impl_->ls).cwiseMin(impl_->us);
    if (prog.warm_x.size() == impl_->n && impl_->n > 0) {
        Vec wy = prog.warm_y.size() == impl_->m ? prog.warm_y : Vec::Zero(impl_->m);
        warm_start(prog.warm_x, wy);
    }
}

void QpEngine::update_cost(const Vec& q, double r0) {
    if (q.size() != impl_->n) throw std::invalid_argument("qp engine: cost dimension mismatch");
    impl_->q = q;
    impl_->r0 = r0;
    impl_->qs = impl_->cost_scale * impl_->D.cwiseProduct(q);
}

void QpEngine::warm_start(const Vec& x, const Vec& y) {
    if (x.size() != impl_->n || y.size() != impl_->m)
        throw std::invalid_argument("qp engine: warm start dimension mismatch");
    impl_->xs = x.cwiseQuotient(impl_->D);
    impl_->ys = impl_->cost_scale * y.cwiseQuotient(impl_->E);
    impl_->zs = (impl_->As * impl_->xs).cwiseMax(impl_->ls).cwiseMin(impl_->us);
}

SolveResult QpEngine::solve() { return impl_->run(); }

SolveResult solve_qp(const ConvexProgram& prog, double tol) {
    QpEngine eng;
    eng.setup(prog, tol);
    return eng.solve();
}

const SolveResult& ensure_solved(const SolveResult& r, const std::string& context) {
    if (r.status == SolveStatus::optimal) return r;
    const char* what = r.status == SolveStatus::infeasible ? "infeasible" : "iteration limit";
    throw SolveError(context + ": solver stopped (" + what + "), primal residual " +
                         std::to_string(r.primal_res) + ", dual residual " + std::to_string(r.dual_res),
                     r);
}

}  // namespace drfl
