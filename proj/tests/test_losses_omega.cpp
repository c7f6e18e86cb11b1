#include "drfl/inner_solver.hpp"
#include "drfl/losses.hpp"
#include "drfl/omega.hpp"
#include "drfl/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

using namespace drfl;

namespace {

ClientDataset make_client(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
    ClientDataset c;
    c.client_id = 1;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Sample s;
        s.x = Eigen::Map<const Vec>(xs[i].data(), static_cast<int>(xs[i].size()));
        s.y = ys[i];
        c.samples.push_back(std::move(s));
    }
    return c;
}

Vec make_vec(std::initializer_list<double> v) {
    Vec out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

double dual_of(NormKind metric, const Vec& w) {
    switch (metric) {
        case NormKind::l1: return w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
        case NormKind::l2: return w.norm();
        case NormKind::linf: return w.lpNorm<1>();
    }
    return 0.0;
}

// Minimizes lam * rho + mean_i max_k (a_ik - lam * b_ik) over lam >= lam_lo.
// Every b_ik is nonnegative and each sample has a piece with b = 0, so the
// objective is convex piecewise linear and attains its minimum either at
// lam_lo or at a crossing of two pieces; enumerating those points is exact.
double minimize_piecewise(double rho, double lam_lo,
                          const std::vector<std::vector<std::pair<double, double>>>& pieces) {
    std::vector<double> candidates{lam_lo};
    for (const auto& sample : pieces) {
        for (std::size_t k = 0; k < sample.size(); ++k) {
            for (std::size_t l = k + 1; l < sample.size(); ++l) {
                const double db = sample[k].second - sample[l].second;
                if (db == 0.0) continue;
                const double lam = (sample[k].first - sample[l].first) / db;
                if (lam > lam_lo) candidates.push_back(lam);
            }
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (double lam : candidates) {
        double g = lam * rho;
        for (const auto& sample : pieces) {
            double sup = -std::numeric_limits<double>::infinity();
            for (const auto& [a, b] : sample) sup = std::max(sup, a - lam * b);
            g += sup / static_cast<double>(pieces.size());
        }
        best = std::min(best, g);
    }
    return best;
}

// Worst case for a margin loss on unbounded features, found directly from
// the transport geometry. Shifting features changes the margin at a cost of
// lam per dual-norm unit of w, and every margin loss here has slope at most
// one, so once lam >= ||w||_dual the feature shift never pays off and each
// sample contributes max{ L(m_i), L(-m_i) - lam * kappa } (the second branch
// buys a label flip). Below that threshold the supremum is infinite.
double oracle_margin_unbounded(const std::function<double(double)>& L, const Vec& w,
                               const ClientDataset& client, double rho, double kappa,
                               NormKind metric) {
    std::vector<std::vector<std::pair<double, double>>> pieces;
    for (const Sample& s : client.samples) {
        const double m = s.y * w.dot(s.x);
        pieces.push_back({{L(m), 0.0}, {L(-m), kappa}});
    }
    return minimize_piecewise(rho, dual_of(metric, w), pieces);
}

// Worst case for hinge on a one-dimensional box, by enumerating the kink
// points of the inner maximization. For a fixed candidate label the payoff
// max(0, 1 - y w x) - lam |x - xhat| is piecewise linear in x, so its
// maximum over the box sits at a box end, at xhat, or at the margin kink.
double oracle_hinge_box_1d(double w, const ClientDataset& client, double rho, double kappa,
                           double lo, double hi) {
    std::vector<std::vector<std::pair<double, double>>> pieces;
    for (const Sample& s : client.samples) {
        std::vector<std::pair<double, double>> ps;
        const double xhat = s.x[0];
        for (int flip = 0; flip < 2; ++flip) {
            const double label = flip ? -s.y : s.y;
            std::vector<double> xs{lo, hi, xhat};
            if (w != 0.0) xs.push_back(1.0 / (label * w));
            for (double x : xs) {
                if (x < lo - 1e-12 || x > hi + 1e-12) continue;
                const double loss = std::max(0.0, 1.0 - label * w * x);
                ps.push_back({loss - 0.0, std::abs(x - xhat) + (flip ? kappa : 0.0)});
            }
        }
        pieces.push_back(std::move(ps));
    }
    return minimize_piecewise(rho, 0.0, pieces);
}

// Worst case for one-dimensional residual losses (svr tube / pinball) when
// features live in [lo, hi] and the label is free below ycap (use +inf for a
// free label). For fixed x the inner payoff is piecewise linear in y with
// kinks at yhat and at the residual kinks, and the resulting value is again
// piecewise linear in x, so enumerating the kink grid is exact. The label
// direction only stays bounded when lam * kappa covers the loss slope.
double oracle_residual_box_1d(LossFamily family, double eps, double w,
                              const ClientDataset& client, double rho, double kappa, double lo,
                              double hi, double ycap) {
    const double slope = family == LossFamily::svr ? 1.0 : std::max(eps, 1.0 - eps);
    auto loss = [&](double r) {
        return family == LossFamily::svr ? std::max(0.0, std::abs(r) - eps)
                                         : std::max(eps * -r, (1.0 - eps) * r);
    };
    std::vector<std::vector<std::pair<double, double>>> pieces;
    for (const Sample& s : client.samples) {
        const double xhat = s.x[0];
        std::vector<double> xs{lo, hi, xhat};
        auto push_ratio = [&](double num) {
            if (w != 0.0) xs.push_back(num / w);
        };
        if (family == LossFamily::svr) {
            push_ratio(s.y + eps);
            push_ratio(s.y - eps);
            if (std::isfinite(ycap)) {
                push_ratio(ycap + eps);
                push_ratio(ycap - eps);
            }
        } else {
            push_ratio(s.y);
            if (std::isfinite(ycap)) push_ratio(ycap);
        }
        std::vector<std::pair<double, double>> ps;
        for (double x : xs) {
            if (x < lo - 1e-12 || x > hi + 1e-12) continue;
            std::vector<double> ys{s.y};
            if (family == LossFamily::svr) {
                ys.push_back(w * x - eps);
                ys.push_back(w * x + eps);
            } else {
                ys.push_back(w * x);
            }
            for (double y : ys) {
                if (std::isfinite(ycap)) y = std::min(y, ycap);
                ps.push_back({loss(w * x - y), std::abs(x - xhat) + kappa * std::abs(y - s.y)});
            }
            if (std::isfinite(ycap))
                ps.push_back({loss(w * x - ycap), std::abs(x - xhat) + kappa * std::abs(ycap - s.y)});
        }
        pieces.push_back(std::move(ps));
    }
    // Label moves trade loss slope against lam * kappa, so lam below
    // slope / kappa yields an unbounded supremum.
    return minimize_piecewise(rho, slope / kappa, pieces);
}

// Minimizes rho * lambda + e'alpha / N over a built system with w pinned.
double pinned_minimum(ConstraintSystem cs, const Vec& w, double rho, double tol = 1e-8) {
    const int i_w = cs.layout.index("w");
    for (int j = 0; j < w.size(); ++j) cs.set_bounds(i_w + j, w[j], w[j]);
    ConvexProgram prog;
    const int N = cs.layout.block("alpha").size;
    prog.q = Vec::Zero(cs.num_vars());
    prog.q[cs.layout.index("lambda")] = rho;
    for (int i = 0; i < N; ++i) prog.q[cs.layout.index("alpha", i)] = 1.0 / N;
    prog.P.resize(cs.num_vars(), cs.num_vars());
    prog.cs = std::move(cs);
    return ensure_solved(solve_convex(prog, tol), "pinned_minimum").objective;
}

const ClientDataset kMarginClient = make_client({{0.5, -1.0}, {-0.3, 0.8}, {1.2, 0.4}}, {1, -1, 1});
const ClientDataset kResidualClient = make_client({{0.5, -1.0}, {-0.3, 0.8}, {1.2, 0.4}}, {0.7, -0.2, 1.5});

}  // namespace

TEST_CASE("pointwise losses match their closed forms") {
    const Vec w0 = Vec::Zero(2);
    const Sample s{make_vec({0.3, -0.7}), 1.0};
    CHECK(loss_eval({LossFamily::hinge, {}}, w0, s) == doctest::Approx(1.0));
    CHECK(loss_eval({LossFamily::logistic, {}}, w0, s) == doctest::Approx(std::log(2.0)));
    CHECK(loss_eval({LossFamily::smooth_hinge, {}}, w0, s) == doctest::Approx(0.5));

    const Vec w = make_vec({2.0, 1.0});
    const Sample pos{make_vec({1.0, 0.0}), 1.0};   // score 2, margin 2
    const Sample neg{make_vec({-1.0, 0.5}), 1.0};  // score -1.5, margin -1.5
    CHECK(loss_eval({LossFamily::hinge, {}}, w, pos) == doctest::Approx(0.0));
    CHECK(loss_eval({LossFamily::hinge, {}}, w, neg) == doctest::Approx(2.5));
    CHECK(loss_eval({LossFamily::smooth_hinge, {}}, w, pos) == doctest::Approx(0.0));
    CHECK(loss_eval({LossFamily::smooth_hinge, {}}, w, neg) == doctest::Approx(2.0));
    const Sample mid{make_vec({0.2, 0.0}), 1.0};  // margin 0.4
    CHECK(loss_eval({LossFamily::smooth_hinge, {}}, w, mid) == doctest::Approx(0.5 * 0.36));
    CHECK(loss_eval({LossFamily::logistic, {}}, w, neg) == doctest::Approx(std::log1p(std::exp(1.5))));

    // Residual for the regression checks: score 2, y = 1 -> z = 1.
    const Sample reg{make_vec({1.0, 0.0}), 1.0};
    CHECK(loss_eval({LossFamily::huber, 1.35}, w, reg) == doctest::Approx(0.5));
    const Sample far{make_vec({2.0, 0.0}), 0.0};  // z = 4 beyond the threshold
    CHECK(loss_eval({LossFamily::huber, 1.35}, w, far) ==
          doctest::Approx(1.35 * 4.0 - 0.5 * 1.35 * 1.35));
    CHECK(loss_eval({LossFamily::svr, 1.35}, w, far) == doctest::Approx(4.0 - 1.35));
    CHECK(loss_eval({LossFamily::svr, 1.35}, w, reg) == doctest::Approx(0.0));
    CHECK(loss_eval({LossFamily::quantile, 0.3}, w, far) == doctest::Approx(0.7 * 4.0));
    const Sample below{make_vec({-1.0, 0.0}), 1.0};  // z = -3
    CHECK(loss_eval({LossFamily::quantile, 0.3}, w, below) == doctest::Approx(0.3 * 3.0));

    CHECK_THROWS_AS(loss_eval({LossFamily::hinge, {}}, w0, Sample{make_vec({1.0}), 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(loss_eval({LossFamily::huber, {}}, w, reg), std::invalid_argument);
    CHECK(empirical_loss({LossFamily::hinge, {}}, Vec::Zero(2), kMarginClient) == doctest::Approx(1.0));
}

TEST_CASE("omega systems have the documented shape") {
    const SupportSpec unbounded{};
    const SupportSpec box_sym{SupportKind::box_symmetric, {}, {}, {}};
    const SupportSpec box_unit{SupportKind::box_unit, {}, {}, {}};

    // One-sample, one-feature hinge on the symmetric box.
    const ClientDataset tiny = make_client({{0.2}}, {1});
    ConstraintSystem hinge_box = build_omega({LossFamily::hinge, {}}, box_sym, 0.5, NormKind::l1, tiny);
    CHECK(hinge_box.n_epigraph_rows == 2);
    CHECK(hinge_box.n_dual_norm_rows == 2);
    CHECK(hinge_box.lin.size() == 6);  // 2 epigraph + 2 box rows per dual norm
    CHECK_FALSE(hinge_box.has_nonlinear());
    for (const char* name : {"lambda", "alpha", "w", "pi_plus", "pi_minus", "tau_plus", "tau_minus"})
        CHECK(hinge_box.layout.has(name));
    CHECK(hinge_box.num_vars() == 7);

    // Two-sample logistic on unbounded features.
    const ClientDataset two = make_client({{0.5, -1.0, 0.2}, {-0.3, 0.8, 1.0}}, {1, -1});
    ConstraintSystem logit = build_omega({LossFamily::logistic, {}}, unbounded, 1.0, NormKind::l1, two);
    CHECK(logit.lse.size() == 4);
    CHECK(logit.n_epigraph_rows == 4);
    CHECK(logit.n_dual_norm_rows == 1);
    CHECK(logit.lin.size() == 6);  // the dual norm expands per feature

    // One-sample huber: quadratic epigraph plus split absolute value rows,
    // one joint dual-norm row with a separate label pair.
    const ClientDataset reg1 = make_client({{0.4, -0.6}}, {0.9});
    ConstraintSystem hub = build_omega({LossFamily::huber, 1.35}, unbounded, 0.8, NormKind::l1, reg1);
    CHECK(hub.quad.size() == 1);
    CHECK(hub.n_epigraph_rows == 1);
    CHECK(hub.n_dual_norm_rows == 1);
    CHECK(hub.lin.size() == 2 + 4 + 2);
    CHECK(hub.layout.has("mu"));
    CHECK(hub.layout.has("t"));

    // Metric variants: l2 emits second-order rows, linf emits magnitude
    // auxiliaries; l1 stays purely linear for the piecewise-linear families.
    ConstraintSystem hinge_l2 = build_omega({LossFamily::hinge, {}}, box_sym, 0.5, NormKind::l2, tiny);
    CHECK(hinge_l2.soc.size() == 2);
    ConstraintSystem hinge_li = build_omega({LossFamily::hinge, {}}, box_sym, 0.5, NormKind::linf, tiny);
    CHECK(hinge_li.layout.has("dual_aux_0"));
    CHECK_FALSE(hinge_li.has_nonlinear());

    SupportSpec poly;
    poly.kind = SupportKind::polyhedral;
    poly.C = Mat::Zero(1, 3);
    poly.C(0, 0) = 1.0;
    poly.d = make_vec({2.0});
    ConstraintSystem hinge_poly = build_omega({LossFamily::hinge, {}}, poly, 0.5, NormKind::l1, two);
    CHECK_FALSE(hinge_poly.has_nonlinear());
    CHECK(hinge_poly.n_dual_norm_rows == 4);  // two per sample
    CHECK(hinge_poly.layout.has("phi_plus"));

    // Unbounded features collapse the per-sample hinge dual rows to one.
    ConstraintSystem hinge_unb = build_omega({LossFamily::hinge, {}}, unbounded, 0.5, NormKind::l1, two);
    CHECK(hinge_unb.n_dual_norm_rows == 1);

    SupportSpec poly_reg;
    poly_reg.kind = SupportKind::polyhedral;
    poly_reg.C.resize(2, 1);
    poly_reg.C << 1.0, -1.0;
    poly_reg.c2 = make_vec({0.0, 0.0});
    poly_reg.d = make_vec({1.0, 1.0});
    const ClientDataset reg1d = make_client({{0.3}}, {0.5});
    ConstraintSystem svr_poly =
        build_omega({LossFamily::svr, 0.1}, poly_reg, 1.0, NormKind::l1, reg1d);
    CHECK_FALSE(svr_poly.has_nonlinear());
    CHECK(svr_poly.n_dual_norm_rows == 2);
    ConstraintSystem quant_unb =
        build_omega({LossFamily::quantile, 0.3}, unbounded, 1.0, NormKind::l1, reg1d);
    CHECK(quant_unb.n_dual_norm_rows == 2);
    ConstraintSystem svr_unb = build_omega({LossFamily::svr, 0.1}, unbounded, 1.0, NormKind::l1, reg1d);
    CHECK(svr_unb.n_dual_norm_rows == 1);

    // Pairs without a convex reformulation are rejected outright.
    try {
        build_omega({LossFamily::huber, 1.35}, box_sym, 1.0, NormKind::l1, reg1);
        FAIL("expected build_omega to reject huber on a box");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("no convex reformulation") != std::string::npos);
    }
    CHECK_THROWS_AS(build_omega({LossFamily::huber, 1.35}, poly_reg, 1.0, NormKind::l1, reg1d),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_omega({LossFamily::smooth_hinge, {}}, poly, 1.0, NormKind::l1, two),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_omega({LossFamily::logistic, {}}, box_unit, 1.0, NormKind::l1, two),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_omega({LossFamily::svr, 0.1}, box_sym, 1.0, NormKind::l1, reg1d),
                    std::invalid_argument);
    // Epsilon rules are enforced at build time as well.
    CHECK_THROWS_AS(build_omega({LossFamily::hinge, 0.5}, box_sym, 1.0, NormKind::l1, tiny),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_omega({LossFamily::huber, {}}, unbounded, 1.0, NormKind::l1, reg1),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_omega({LossFamily::hinge, {}}, box_sym, 0.0, NormKind::l1, tiny),
                    std::invalid_argument);
}

TEST_CASE("feasibility witnesses for the hinge system") {
    const ClientDataset tiny = make_client({{0.2}}, {1});
    const SupportSpec box_sym{SupportKind::box_symmetric, {}, {}, {}};
    ConstraintSystem cs = build_omega({LossFamily::hinge, {}}, box_sym, 0.5, NormKind::l1, tiny);

    Vec v = Vec::Zero(cs.num_vars());
    v[cs.layout.index("alpha")] = 1.0;  // both epigraph rows bind at 1 <= 1
    CHECK(omega_feasible(cs, v).feasible);

    v[cs.layout.index("alpha")] = 0.0;
    const FeasibilityReport report = omega_feasible(cs, v);
    CHECK_FALSE(report.feasible);
    CHECK(report.max_violation == doctest::Approx(1.0));

    CHECK_THROWS_AS(omega_feasible(cs, Vec::Zero(2)), std::invalid_argument);
}

TEST_CASE("box hinge rows match the expanded polyhedron rows") {
    Rng rng(7);
    const int n = 3;
    const ClientDataset client = make_client({{0.5, -0.2, 0.9}, {-0.4, 0.1, 0.3}}, {1, -1});
    const int N = client.size();

    for (SupportKind kind : {SupportKind::box_symmetric, SupportKind::box_unit}) {
        SupportSpec box;
        box.kind = kind;
        SupportSpec poly;
        poly.kind = SupportKind::polyhedral;
        poly.C.resize(2 * n, n);
        poly.C << Mat::Identity(n, n), -Mat::Identity(n, n);
        poly.d.resize(2 * n);
        poly.d.head(n).setOnes();
        if (kind == SupportKind::box_symmetric)
            poly.d.tail(n).setOnes();
        else
            poly.d.tail(n).setZero();

        ConstraintSystem bs = build_omega({LossFamily::hinge, {}}, box, 0.7, NormKind::l1, client);
        ConstraintSystem ps = build_omega({LossFamily::hinge, {}}, poly, 0.7, NormKind::l1, client);
        REQUIRE(bs.lin.size() == ps.lin.size());
        REQUIRE(bs.num_vars() == ps.num_vars());

        for (int trial = 0; trial < 40; ++trial) {
            Vec vb(bs.num_vars());
            for (int j = 0; j < vb.size(); ++j) vb[j] = rng.uniform(-2.0, 2.0);
            // Nonnegative blocks stay nonnegative so the point is meaningful.
            for (const char* name : {"lambda", "alpha", "pi_plus", "pi_minus", "tau_plus", "tau_minus"}) {
                const auto& blk = bs.layout.block(name);
                for (int j = 0; j < blk.size; ++j) vb[blk.offset + j] = std::abs(vb[blk.offset + j]);
            }
            // Map (pi, tau) stacks onto the face-multiplier layout phi = (pi, tau).
            Vec vp = Vec::Zero(ps.num_vars());
            for (const char* name : {"lambda", "alpha", "w"}) {
                const auto& blk = bs.layout.block(name);
                for (int j = 0; j < blk.size; ++j)
                    vp[ps.layout.index(name, j)] = vb[blk.offset + j];
            }
            for (int i = 0; i < N; ++i) {
                for (int j = 0; j < n; ++j) {
                    vp[ps.layout.index("phi_plus", i * 2 * n + j)] = vb[bs.layout.index("pi_plus", i * n + j)];
                    vp[ps.layout.index("phi_plus", i * 2 * n + n + j)] = vb[bs.layout.index("tau_plus", i * n + j)];
                    vp[ps.layout.index("phi_minus", i * 2 * n + j)] = vb[bs.layout.index("pi_minus", i * n + j)];
                    vp[ps.layout.index("phi_minus", i * 2 * n + n + j)] = vb[bs.layout.index("tau_minus", i * n + j)];
                }
            }
            for (std::size_t r = 0; r < bs.lin.size(); ++r) {
                const double left = eval_expr(bs.lin[r].a, vb) - bs.lin[r].hi;
                const double right = eval_expr(ps.lin[r].a, vp) - ps.lin[r].hi;
                CHECK(std::abs(left - right) <= 1e-10);
            }
            CHECK(std::abs(bs.max_violation(vb) - ps.max_violation(vp)) <= 1e-10);
        }
    }
}

TEST_CASE("worst-case hinge on boxes matches kink search") {
    const LossSpec hinge{LossFamily::hinge, {}};
    const SupportSpec box_sym{SupportKind::box_symmetric, {}, {}, {}};
    const SupportSpec box_unit{SupportKind::box_unit, {}, {}, {}};

    // Single-sample instance on the symmetric box.
    {
        const ClientDataset c = make_client({{0.4}}, {1});
        const Vec w = make_vec({1.5});
        const double got = worst_case_client_loss(w, c, 0.1, 0.5, NormKind::l1, hinge, box_sym);
        const double want = oracle_hinge_box_1d(1.5, c, 0.1, 0.5, -1.0, 1.0);
        CHECK(std::abs(got - want) <= 1e-6);
    }
    // Two samples, both box kinds, a few radii and label costs.
    const ClientDataset c = make_client({{0.3}, {0.8}}, {1, -1});
    for (double wv : {-2.0, 0.7}) {
        const Vec w = make_vec({wv});
        for (double rho : {0.05, 0.4}) {
            for (double kappa : {0.3, 1.0}) {
                const double sym = worst_case_client_loss(w, c, rho, kappa, NormKind::l1, hinge, box_sym);
                CHECK(std::abs(sym - oracle_hinge_box_1d(wv, c, rho, kappa, -1.0, 1.0)) <= 1e-6);
                const double unit = worst_case_client_loss(w, c, rho, kappa, NormKind::l1, hinge, box_unit);
                CHECK(std::abs(unit - oracle_hinge_box_1d(wv, c, rho, kappa, 0.0, 1.0)) <= 1e-6);
            }
        }
    }
}

TEST_CASE("worst-case margin losses on unbounded features match kink search") {
    const SupportSpec unbounded{};
    const Vec w = make_vec({0.8, -0.5});
    auto hinge = [](double m) { return std::max(0.0, 1.0 - m); };
    auto logit = [](double m) { return log1p_exp(-m); };
    auto smooth = [](double m) {
        if (m >= 1.0) return 0.0;
        if (m >= 0.0) return 0.5 * (1.0 - m) * (1.0 - m);
        return 0.5 - m;
    };

    for (double rho : {0.02, 0.3}) {
        for (double kappa : {0.4, 1.0}) {
            const double h = worst_case_client_loss(w, kMarginClient, rho, kappa, NormKind::l1,
                                                    {LossFamily::hinge, {}}, unbounded);
            CHECK(std::abs(h - oracle_margin_unbounded(hinge, w, kMarginClient, rho, kappa,
                                                       NormKind::l1)) <= 1e-6);
            const double g = worst_case_client_loss(w, kMarginClient, rho, kappa, NormKind::l1,
                                                    {LossFamily::logistic, {}}, unbounded);
            CHECK(std::abs(g - oracle_margin_unbounded(logit, w, kMarginClient, rho, kappa,
                                                       NormKind::l1)) <= 5e-6);
            const double sh = worst_case_client_loss(w, kMarginClient, rho, kappa, NormKind::l1,
                                                     {LossFamily::smooth_hinge, {}}, unbounded);
            CHECK(std::abs(sh - oracle_margin_unbounded(smooth, w, kMarginClient, rho, kappa,
                                                        NormKind::l1)) <= 5e-6);
        }
    }

    // The other transport metrics swap in the matching dual norm of w.
    for (NormKind metric : {NormKind::l2, NormKind::linf}) {
        const double g = worst_case_client_loss(w, kMarginClient, 0.2, 0.6, metric,
                                                {LossFamily::logistic, {}}, unbounded);
        CHECK(std::abs(g - oracle_margin_unbounded(logit, w, kMarginClient, 0.2, 0.6, metric)) <= 5e-6);
        const double h = worst_case_client_loss(w, kMarginClient, 0.2, 0.6, metric,
                                                {LossFamily::hinge, {}}, unbounded);
        CHECK(std::abs(h - oracle_margin_unbounded(hinge, w, kMarginClient, 0.2, 0.6, metric)) <= 5e-6);
    }
}

TEST_CASE("worst-case regression losses reduce to slope penalties") {
    // On unbounded supports a residual shift of one unit costs
    // lam * min(1 / ||w||_dual, kappa)^{-1}; the loss tails are linear, so
    // the inner supremum is finite exactly when lam covers the tail slope
    // times max(||w||_dual, 1 / kappa) and then equals the empirical loss.
    const SupportSpec unbounded{};
    const Vec w = make_vec({0.8, -1.4});

    for (double kappa : {0.6, 2.0}) {
        for (double rho : {0.05, 0.4}) {
            for (NormKind metric : {NormKind::l1, NormKind::l2}) {
                const double lever = std::max(dual_of(metric, w), 1.0 / kappa);
                const LossSpec hub{LossFamily::huber, 1.35};
                const double wc_h =
                    worst_case_client_loss(w, kResidualClient, rho, kappa, metric, hub, unbounded);
                CHECK(std::abs(wc_h - (rho * 1.35 * lever +
                                       empirical_loss(hub, w, kResidualClient))) <= 5e-6);

                const LossSpec svr{LossFamily::svr, 0.25};
                const double wc_s =
                    worst_case_client_loss(w, kResidualClient, rho, kappa, metric, svr, unbounded);
                CHECK(std::abs(wc_s - (rho * lever + empirical_loss(svr, w, kResidualClient))) <= 5e-6);

                const LossSpec qt{LossFamily::quantile, 0.3};
                const double wc_q =
                    worst_case_client_loss(w, kResidualClient, rho, kappa, metric, qt, unbounded);
                CHECK(std::abs(wc_q - (rho * 0.7 * lever + empirical_loss(qt, w, kResidualClient))) <= 5e-6);
            }
        }
    }
}

TEST_CASE("residual losses on polyhedral supports match kink search") {
    // Features in [-1, 2]; label either free or capped at 3 via the joint rows.
    const ClientDataset c = make_client({{0.3}, {1.4}}, {0.5, 2.2});
    const double w = 1.1;
    const Vec wv = make_vec({w});

    SupportSpec free_label;
    free_label.kind = SupportKind::polyhedral;
    free_label.C.resize(2, 1);
    free_label.C << 1.0, -1.0;
    free_label.c2 = make_vec({0.0, 0.0});
    free_label.d = make_vec({2.0, 1.0});

    SupportSpec capped = free_label;
    capped.C.resize(3, 1);
    capped.C << 1.0, -1.0, 0.0;
    capped.c2 = make_vec({0.0, 0.0, 1.0});
    capped.d = make_vec({2.0, 1.0, 3.0});

    for (double rho : {0.1, 0.6}) {
        const double kappa = 1.8;
        const LossSpec svr{LossFamily::svr, 0.25};
        const double got_free = worst_case_client_loss(wv, c, rho, kappa, NormKind::l1, svr, free_label);
        const double want_free = oracle_residual_box_1d(LossFamily::svr, 0.25, w, c, rho, kappa,
                                                        -1.0, 2.0, kInf);
        CHECK(std::abs(got_free - want_free) <= 1e-6);
        const double got_cap = worst_case_client_loss(wv, c, rho, kappa, NormKind::l1, svr, capped);
        const double want_cap = oracle_residual_box_1d(LossFamily::svr, 0.25, w, c, rho, kappa,
                                                       -1.0, 2.0, 3.0);
        CHECK(std::abs(got_cap - want_cap) <= 1e-6);

        const LossSpec qt{LossFamily::quantile, 0.8};
        const double got_q = worst_case_client_loss(wv, c, rho, kappa, NormKind::l1, qt, capped);
        const double want_q = oracle_residual_box_1d(LossFamily::quantile, 0.8, w, c, rho, kappa,
                                                     -1.0, 2.0, 3.0);
        CHECK(std::abs(got_q - want_q) <= 1e-6);
    }
}

TEST_CASE("worst-case loss is nondecreasing in the radius") {
    const std::vector<double> radii{0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0};
    const SupportSpec unbounded{};
    const SupportSpec box_sym{SupportKind::box_symmetric, {}, {}, {}};

    const ClientDataset c1d = make_client({{0.3}, {0.8}}, {1, -1});
    const Vec w1 = make_vec({1.3});
    const Vec w2 = make_vec({0.8, -0.5});

    std::vector<std::function<double(double)>> curves{
        [&](double rho) {
            return worst_case_client_loss(w1, c1d, rho, 0.5, NormKind::l1, {LossFamily::hinge, {}}, box_sym);
        },
        [&](double rho) {
            return worst_case_client_loss(w2, kMarginClient, rho, 0.7, NormKind::l1,
                                          {LossFamily::logistic, {}}, unbounded);
        },
        [&](double rho) {
            return worst_case_client_loss(w2, kResidualClient, rho, 0.8, NormKind::l1,
                                          {LossFamily::huber, 1.35}, unbounded);
        }};
    for (const auto& curve : curves) {
        double prev = -kInf;
        for (double rho : radii) {
            const double value = curve(rho);
            CHECK(value >= prev - 1e-6);
            prev = value;
        }
    }
}

TEST_CASE("worst-case loss dominates the empirical mean") {
    const SupportSpec unbounded{};
    const SupportSpec box_sym{SupportKind::box_symmetric, {}, {}, {}};
    const double rho = 0.2, kappa = 0.7;

    const Vec w = make_vec({0.9, -0.4});
    struct Case {
        LossSpec loss;
        SupportSpec support;
        const ClientDataset* client;
    };
    const std::vector<Case> cases{
        {{LossFamily::huber, 1.35}, unbounded, &kResidualClient},
        {{LossFamily::svr, 0.25}, unbounded, &kResidualClient},
        {{LossFamily::quantile, 0.3}, unbounded, &kResidualClient},
        {{LossFamily::hinge, {}}, unbounded, &kMarginClient},
        {{LossFamily::smooth_hinge, {}}, unbounded, &kMarginClient},
        {{LossFamily::logistic, {}}, unbounded, &kMarginClient},
    };
    for (const Case& cs : cases) {
        const double wc =
            worst_case_client_loss(w, *cs.client, rho, kappa, NormKind::l1, cs.loss, cs.support);
        CHECK(wc >= empirical_loss(cs.loss, w, *cs.client) - 1e-6);
    }
    const ClientDataset c1d = make_client({{0.3}, {0.8}}, {1, -1});
    const double wc_box =
        worst_case_client_loss(make_vec({1.3}), c1d, rho, kappa, NormKind::l1, {LossFamily::hinge, {}}, box_sym);
    CHECK(wc_box >= empirical_loss({LossFamily::hinge, {}}, make_vec({1.3}), c1d) - 1e-6);
}

TEST_CASE("zero weights make the hinge worst case one") {
    const ClientDataset c1d = make_client({{0.3}, {0.8}}, {1, -1});
    const Vec w0 = Vec::Zero(1);
    SupportSpec poly;
    poly.kind = SupportKind::polyhedral;
    poly.C.resize(2, 1);
    poly.C << 1.0, -1.0;
    poly.d = make_vec({3.0, 2.0});
    const std::vector<SupportSpec> supports{
        SupportSpec{}, SupportSpec{SupportKind::box_symmetric, {}, {}, {}}, poly};
    for (const SupportSpec& support : supports) {
        for (double rho : {0.01, 0.5}) {
            for (double kappa : {0.25, 1.0}) {
                const double wc =
                    worst_case_client_loss(w0, c1d, rho, kappa, NormKind::l1, {LossFamily::hinge, {}}, support);
                CHECK(std::abs(wc - 1.0) <= 1e-6);
            }
        }
    }
}

TEST_CASE("empirical epigraph programs recover mean losses") {
    const Vec w = make_vec({0.6, -0.9});
    const std::vector<LossSpec> reg{{LossFamily::huber, 1.35},
                                    {LossFamily::svr, 0.25},
                                    {LossFamily::quantile, 0.3}};
    for (const LossSpec& loss : reg) {
        ConstraintSystem cs = build_empirical_epigraph(loss, kResidualClient);
        CHECK(pinned_minimum(std::move(cs), w, 0.0) ==
              doctest::Approx(empirical_loss(loss, w, kResidualClient)).epsilon(1e-5));
    }
    const std::vector<LossSpec> cls{{LossFamily::hinge, {}},
                                    {LossFamily::smooth_hinge, {}},
                                    {LossFamily::logistic, {}}};
    for (const LossSpec& loss : cls) {
        ConstraintSystem cs = build_empirical_epigraph(loss, kMarginClient);
        CHECK(pinned_minimum(std::move(cs), w, 0.0) ==
              doctest::Approx(empirical_loss(loss, w, kMarginClient)).epsilon(1e-5));
    }

    // The zero-radius branch short-circuits to the same value.
    CHECK(worst_case_client_loss(w, kMarginClient, 0.0, 1.0, NormKind::l1, {LossFamily::hinge, {}},
                                 SupportSpec{}) ==
          doctest::Approx(empirical_loss({LossFamily::hinge, {}}, w, kMarginClient)));
}

TEST_CASE("worst-case loss argument checking") {
    const Vec w = make_vec({0.6, -0.9});
    const SupportSpec unbounded{};
    CHECK_THROWS_AS(worst_case_client_loss(make_vec({1.0}), kMarginClient, 0.1, 1.0, NormKind::l1,
                                           {LossFamily::hinge, {}}, unbounded),
                    std::invalid_argument);
    CHECK_THROWS_AS(worst_case_client_loss(w, kMarginClient, -0.1, 1.0, NormKind::l1,
                                           {LossFamily::hinge, {}}, unbounded),
                    std::invalid_argument);

    RobustnessSpec rob;
    rob.rho = make_vec({0.1, 0.2});
    rob.kappa = 0.7;
    const double by_spec =
        worst_case_client_loss(w, kMarginClient, rob, 1, {LossFamily::hinge, {}}, unbounded);
    const double direct = worst_case_client_loss(w, kMarginClient, 0.2, 0.7, NormKind::l1,
                                                 {LossFamily::hinge, {}}, unbounded);
    CHECK(by_spec == doctest::Approx(direct));
    CHECK_THROWS_AS(
        worst_case_client_loss(w, kMarginClient, rob, 2, {LossFamily::hinge, {}}, unbounded),
        std::invalid_argument);
}
