#include "drfl/admm.hpp"

#include "drfl/model.hpp"
#include "drfl/omega.hpp"
#include "drfl/projections.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace drfl {

namespace {

constexpr double kClientTol = 1e-7;  // accuracy of every client subproblem solve

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

Vec ones_times(int S, double v) { return Vec::Constant(S, v); }

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Index bookkeeping for the client subproblem layout.
struct ClientLayout {
    int i_lambda = 0;
    int off_alpha = 0;
    int n_alpha = 0;
    int off_w = 0;
    int i_level = 0;
};

// Client feasible-set rows plus the scalar level variable v with
// v = rho_s lambda + mean(alpha) as an equality row.
ConstraintSystem client_system(const ProblemSpec& spec, double rho_s,
                               const ClientDataset& data, ClientLayout* lay) {
    ConstraintSystem cs =
        rho_s > 0.0 ? build_omega(spec.loss, spec.support, spec.robustness.kappa,
                                  spec.robustness.metric_norm, data)
                    : build_empirical_epigraph(spec.loss, data);
    lay->i_lambda = cs.layout.index("lambda");
    const VariableLayout::Block& ab = cs.layout.block("alpha");
    lay->off_alpha = ab.offset;
    lay->n_alpha = ab.size;
    lay->off_w = cs.layout.index("w");
    lay->i_level = cs.add_var("level", 1);
    LinExpr level;
    level.push_back({lay->i_level, 1.0});
    if (rho_s > 0.0) level.push_back({lay->i_lambda, -rho_s});
    const double inv_n = 1.0 / static_cast<double>(lay->n_alpha);
    for (int i = 0; i < lay->n_alpha; ++i) level.push_back({lay->off_alpha + i, -inv_n});
    cs.add_eq(std::move(level), 0.0);
    return cs;
}

// Quadratic part (c/2)||w_hat||^2 + (c/2) v^2; the cross terms against the
// iterate live in the linear cost, so this matrix is iteration-independent.
SpMat client_quadratic(const ConstraintSystem& cs, const ClientLayout& lay, int n, double c) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j < n; ++j) trips.emplace_back(lay.off_w + j, lay.off_w + j, c);
    trips.emplace_back(lay.i_level, lay.i_level, c);
    SpMat P(cs.num_vars(), cs.num_vars());
    P.setFromTriplets(trips.begin(), trips.end());
    return P;
}

// Linear cost and constant completing zeta v - psi'w_hat + (c/2)||w - w_hat||^2
// + (c/2)(v - z_s)^2 on top of client_quadratic.
void client_cost(const ClientLayout& lay, int nv, const Vec& w, double z_s, const Vec& psi,
                 double zeta, double c, Vec* q, double* r0) {
    *q = Vec::Zero(nv);
    q->segment(lay.off_w, w.size()) = -(c * w + psi);
    (*q)[lay.i_level] = zeta - c * z_s;
    *r0 = 0.5 * c * (w.squaredNorm() + z_s * z_s);
}

ClientUpdateResult extract_client(double rho_s, const ClientLayout& lay, int n,
                                  const SolveResult& res) {
    ClientUpdateResult out;
    out.lambda = rho_s > 0.0 ? res.x[lay.i_lambda] : 0.0;
    out.alpha = res.x.segment(lay.off_alpha, lay.n_alpha);
    out.w_hat = res.x.segment(lay.off_w, n);
    out.pi = rho_s * out.lambda + out.alpha.mean();
    out.objective = res.objective;
    out.x = res.x;
    out.y = res.y;
    return out;
}

std::string client_context(int client_id) {
    return "client " + std::to_string(client_id) + " subproblem";
}

// Per-client persistent solver: the constraint rows, quadratic part, scaling,
// and factorization are built once; each iteration only swaps the linear cost
// and warm-starts from the previous solution.
struct ClientEngine {
    ClientLayout lay;
    ConstraintSystem cs;
    SpMat P;
    bool nonlinear = false;
    QpEngine qp;
    AlmEngine alm;
    SolveResult last;
    bool has_last = false;

    void setup(const ProblemSpec& spec, double rho_s, const ClientDataset& data, double c) {
        cs = client_system(spec, rho_s, data, &lay);
        P = client_quadratic(cs, lay, data.dim(), c);
        nonlinear = cs.has_nonlinear();
        ConvexProgram prog;
        prog.cs = cs;
        prog.P = P;
        prog.q = Vec::Zero(cs.num_vars());
        if (nonlinear)
            alm.setup(prog, kClientTol);
        else
            qp.setup(prog, kClientTol);
    }

    ClientUpdateResult step(const ClientDataset& data, double rho_s, const Vec& w, double z_s,
                            const Vec& psi, double zeta, double c) {
        Vec q;
        double r0 = 0.0;
        client_cost(lay, cs.num_vars(), w, z_s, psi, zeta, c, &q, &r0);
        SolveResult res;
        if (nonlinear) {
            alm.update_cost(q, r0);
            if (has_last) alm.warm_start(last.x);
            res = alm.solve();
        } else {
            qp.update_cost(q, r0);
            if (has_last) qp.warm_start(last.x, last.y);
            res = qp.solve();
        }
        if (res.status != SolveStatus::optimal) {
            // Multiplier and penalty memory accumulated over many warm solves
            // can pin the engine just above its stopping test; a cold restart
            // clears it before we give up on the iteration.
            ConvexProgram prog;
            prog.cs = cs;
            prog.P = P;
            prog.q = q;
            prog.r0 = r0;
            if (nonlinear) {
                alm.setup(prog, kClientTol);
                res = alm.solve();
            } else {
                qp.setup(prog, kClientTol);
                res = qp.solve();
            }
        }
        ensure_solved(res, client_context(data.client_id));
        last = res;
        has_last = true;
        return extract_client(rho_s, lay, data.dim(), res);
    }
};

// Runs fn(s) for s in [0, S), spreading the calls over up to `threads`
// workers. Exceptions are captured per client and the first (by index) is
// rethrown after all workers finish.
void for_each_client(int S, int threads, const std::function<void(int)>& fn) {
    const int T = std::max(1, std::min(threads, S));
    if (T == 1) {
        for (int s = 0; s < S; ++s) fn(s);
        return;
    }
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(S));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        pool.emplace_back([&] {
            for (int s = next.fetch_add(1); s < S; s = next.fetch_add(1)) {
                try {
                    fn(s);
                } catch (...) {
                    errs[static_cast<std::size_t>(s)] = std::current_exception();
                }
            }
        });
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errs)
        if (e) std::rethrow_exception(e);
}

double mixture_objective(const Vec& q_hat, const Vec& z, const Vec& eta, double gamma,
                         double theta, NormKind p) {
    // The slack block is empty on the reduced path (no norm term).
    const Vec lifted = eta.size() == z.size() ? Vec(z + eta.cwiseMax(0.0)) : z;
    double ob = q_hat.dot(lifted);
    if (theta > 0.0)
        ob += theta * norm_of(lifted + ones_times(static_cast<int>(z.size()), gamma),
                              dual_norm_kind(p));
    return ob;
}

std::vector<int> draw_subset(Rng& rng, int total, int subset_size) {
    std::vector<int> pick = rng.permutation(total);
    pick.resize(static_cast<std::size_t>(subset_size));
    std::sort(pick.begin(), pick.end());
    return pick;
}

ClientDataset take_subset(const ClientDataset& data, const std::vector<int>& pick) {
    ClientDataset sub;
    sub.client_id = data.client_id;
    sub.samples.reserve(pick.size());
    for (int i : pick) sub.samples.push_back(data.samples[static_cast<std::size_t>(i)]);
    return sub;
}

}  // namespace

void audit_message_log(const MessageLog& log, int n) {
    for (std::size_t i = 0; i < log.size(); ++i) {
        const Message& m = log[i];
        const int want = m.direction == Message::Direction::to_server ? n + 1 : 2 * n + 2;
        if (static_cast<int>(m.payload.size()) != want)
            throw std::logic_error("message log: entry " + std::to_string(i) + " (iteration " +
                                   std::to_string(m.iteration) + ", client " +
                                   std::to_string(m.client_id) + ") carries " +
                                   std::to_string(m.payload.size()) + " values, expected " +
                                   std::to_string(want));
    }
}

Vec update_w(const std::vector<Vec>& w_hat, const std::vector<Vec>& psi, double c) {
    require(c > 0.0, "update_w: stepsize must be positive");
    require(!w_hat.empty() && w_hat.size() == psi.size(),
            "update_w: need matching nonempty w_hat / psi lists");
    const Eigen::Index n = w_hat.front().size();
    Vec acc = Vec::Zero(n);
    for (std::size_t s = 0; s < w_hat.size(); ++s) {
        require(w_hat[s].size() == n && psi[s].size() == n, "update_w: dimension mismatch");
        acc += c * w_hat[s] - psi[s];
    }
    return acc / (c * static_cast<double>(w_hat.size()));
}

Vec update_z(const Vec& t_bar, const Vec& z_bar, const Vec& eta, double gamma, const Vec& pi,
             const Vec& zeta, const Vec& sigma, double c, int S) {
    require(c > 0.0, "update_z: stepsize must be positive");
    require(S > 0, "update_z: need at least one client");
    require(t_bar.size() == S && z_bar.size() == S && eta.size() == S && pi.size() == S &&
                zeta.size() == S && sigma.size() == S,
            "update_z: dimension mismatch");
    const Vec resid = t_bar - z_bar - ones_times(S, gamma) - eta;
    return (pi + resid + 2.0 * S * z_bar + (zeta + sigma) / c) / (1.0 + 2.0 * S);
}

Vec update_t(const Vec& t_bar, const Vec& z_bar, const Vec& eta, double gamma, const Vec& sigma,
             const Vec& q_hat, double theta, NormKind p, double c, int S) {
    require(c > 0.0, "update_t: stepsize must be positive");
    require(theta > 0.0, "update_t: requires a positive mixture ball radius");
    require(S > 0, "update_t: need at least one client");
    require(t_bar.size() == S && z_bar.size() == S && eta.size() == S && sigma.size() == S &&
                q_hat.size() == S,
            "update_t: dimension mismatch");
    const double scale = 2.0 * S * c;
    const Vec resid = t_bar - z_bar - ones_times(S, gamma) - eta;
    const Vec u = t_bar - (q_hat + sigma + c * resid) / scale;
    return prox_dual_norm(u, theta / scale, p);
}

Vec update_eta(const Vec& t, const Vec& z, const Vec& eta_bar, double gamma_bar, const Vec& sigma,
               double c, int S) {
    require(c > 0.0, "update_eta: stepsize must be positive");
    require(S > 0, "update_eta: need at least one client");
    require(t.size() == S && z.size() == S && eta_bar.size() == S && sigma.size() == S,
            "update_eta: dimension mismatch");
    const Vec step = sigma / c - ones_times(S, gamma_bar) - eta_bar + t - z;
    return (eta_bar + step / (2.0 * S)).cwiseMax(0.0);
}

double update_gamma(const Vec& t, const Vec& z, const Vec& eta_bar, double gamma_bar,
                    const Vec& sigma, double c, int S) {
    require(c > 0.0, "update_gamma: stepsize must be positive");
    require(S > 0, "update_gamma: need at least one client");
    require(t.size() == S && z.size() == S && eta_bar.size() == S && sigma.size() == S,
            "update_gamma: dimension mismatch");
    const Vec step = -ones_times(S, gamma_bar) - eta_bar + t - z;
    return gamma_bar + (1.0 + sigma.sum() + c * step.sum()) / (2.0 * S * c);
}

void dual_update(SolverState& state, std::vector<ClientState>& clients, double c) {
    require(c > 0.0, "dual_update: stepsize must be positive");
    const int S = static_cast<int>(clients.size());
    require(S > 0, "dual_update: need at least one client");
    require(state.t.size() == S && state.z.size() == S && state.eta.size() == S &&
                state.sigma.size() == S,
            "dual_update: dimension mismatch");
    state.sigma += c * (state.t - state.z - ones_times(S, state.gamma) - state.eta);
    for (int s = 0; s < S; ++s) {
        ClientState& cl = clients[static_cast<std::size_t>(s)];
        require(cl.psi.size() == state.w.size() && cl.w_hat.size() == state.w.size(),
                "dual_update: dimension mismatch");
        cl.psi += c * (state.w - cl.w_hat);
        cl.zeta += c * (cl.pi - state.z[s]);
    }
}

ConvexProgram build_client_subproblem(const ProblemSpec& spec, double rho_s,
                                      const ClientDataset& data, const Vec& w, double z_s,
                                      const Vec& psi, double zeta, double c) {
    require(c > 0.0, "client subproblem: stepsize must be positive");
    require(w.size() == data.dim() && psi.size() == w.size(),
            "client subproblem: dimension mismatch");
    ClientLayout lay;
    ConvexProgram prog;
    prog.cs = client_system(spec, rho_s, data, &lay);
    prog.P = client_quadratic(prog.cs, lay, static_cast<int>(w.size()), c);
    client_cost(lay, prog.cs.num_vars(), w, z_s, psi, zeta, c, &prog.q, &prog.r0);
    return prog;
}

ClientUpdateResult client_update(int s, const Vec& w, double z_s, const Vec& psi, double zeta,
                                 const ProblemSpec& spec, const ClientDataset& data, double c,
                                 const ClientState* warm) {
    require(s >= 0 && s < spec.robustness.rho.size(), "client update: client index out of range");
    const double rho_s = spec.robustness.rho[s];
    ClientLayout lay;
    ConvexProgram prog;
    prog.cs = client_system(spec, rho_s, data, &lay);
    prog.P = client_quadratic(prog.cs, lay, data.dim(), c);
    client_cost(lay, prog.cs.num_vars(), w, z_s, psi, zeta, c, &prog.q, &prog.r0);
    if (warm && warm->x.size() == prog.cs.num_vars()) {
        prog.warm_x = warm->x;
        if (warm->y.size()) prog.warm_y = warm->y;
    }
    SolveResult res = solve_convex(prog, kClientTol);
    ensure_solved(res, client_context(data.client_id));
    return extract_client(rho_s, lay, data.dim(), res);
}

ClientUpdateResult client_update_minibatch(int s, const Vec& w, double z_s, const Vec& psi,
                                           double zeta, const ProblemSpec& spec,
                                           const ClientDataset& data, double c, int subset_size,
                                           Rng& rng) {
    require(subset_size >= 1 && subset_size <= data.size(),
            "mini-batch update: subset size must lie in [1, N_s]");
    std::vector<int> pick = draw_subset(rng, data.size(), subset_size);
    const ClientDataset sub = take_subset(data, pick);
    ClientUpdateResult out = client_update(s, w, z_s, psi, zeta, spec, sub, c, nullptr);
    out.subset = std::move(pick);
    return out;
}

SolveOutput solve_drfl(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                       const SolverConfig& config) {
    {
        std::vector<std::string> errs = validate(spec, clients);
        // The degenerate ball radius is rejected by the general model check but
        // runs here through a dedicated reduced loop without the norm block.
        if (spec.weights.theta == 0.0)
            std::erase(errs, std::string("theta must be positive"));
        const std::vector<std::string> more = validate(config, clients);
        errs.insert(errs.end(), more.begin(), more.end());
        if (!errs.empty()) throw std::invalid_argument("solve: " + errs.front());
    }

    const int S = static_cast<int>(clients.size());
    const int n = clients.front().dim();
    std::vector<int> sizes;
    sizes.reserve(clients.size());
    for (const ClientDataset& cd : clients) sizes.push_back(cd.size());
    const Vec q_hat = resolve_q_hat(spec.weights, sizes);
    const Vec& rho = spec.robustness.rho;
    const double theta = spec.weights.theta;
    const NormKind p = spec.weights.p;
    const double c = config.stepsize;
    const bool coupled = theta > 0.0;
    const bool minibatch = config.minibatch_size.has_value();

    SolverState st;
    st.w = Vec::Zero(n);
    st.z = Vec::Zero(S);
    st.gamma = 0.0;
    // Blocks of the norm term stay empty on the reduced path.
    st.t = coupled ? Vec::Zero(S) : Vec();
    st.eta = coupled ? Vec::Zero(S) : Vec();
    st.sigma = coupled ? Vec::Zero(S) : Vec();

    std::vector<ClientState> cst(static_cast<std::size_t>(S));
    for (ClientState& cl : cst) {
        cl.psi = Vec::Zero(n);
        cl.w_hat = Vec::Zero(n);
    }

    std::vector<ClientEngine> engines;
    if (!minibatch) {
        engines.resize(static_cast<std::size_t>(S));
        for (int s = 0; s < S; ++s)
            engines[static_cast<std::size_t>(s)].setup(spec, rho[s], clients[static_cast<std::size_t>(s)], c);
    }
    Rng rng(config.seed);

    RunRecord rec;
    std::ofstream trace;
    if (!config.trace_path.empty()) {
        trace.open(config.trace_path);
        if (!trace)
            throw std::runtime_error("solve: cannot open trace file " + config.trace_path);
        trace << "iter,objective,res_coupling,res_consensus,res_level,time_ms\n";
    }

    const auto t_start = std::chrono::steady_clock::now();
    const auto elapsed_ms = [&t_start] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         t_start)
            .count();
    };

    SolverState best_state = st;
    Vec best_pi = Vec::Zero(S);
    double best_metric = kInf;
    Vec pi_now = Vec::Zero(S);
    bool converged = false;

    for (int k = 1; k <= config.max_iters; ++k) {
        const Vec w_prev = st.w;
        const Vec z_prev = st.z;
        const Vec t_prev = st.t;
        const Vec eta_prev = st.eta;
        const double gamma_prev = st.gamma;
        std::vector<Vec> what_list(static_cast<std::size_t>(S));
        std::vector<Vec> psi_list(static_cast<std::size_t>(S));
        Vec pi_vec(S), zeta_vec(S);
        for (int s = 0; s < S; ++s) {
            const ClientState& cl = cst[static_cast<std::size_t>(s)];
            what_list[static_cast<std::size_t>(s)] = cl.w_hat;
            psi_list[static_cast<std::size_t>(s)] = cl.psi;
            pi_vec[s] = cl.pi;
            zeta_vec[s] = cl.zeta;
        }

        // Server block, in operator order; the z / t steps read only previous
        // iterates while eta / gamma read the fresh t and z.
        st.w = update_w(what_list, psi_list, c);
        if (coupled) {
            const Vec z_new = update_z(st.t, st.z, st.eta, st.gamma, pi_vec, zeta_vec, st.sigma, c, S);
            const Vec t_new = update_t(st.t, st.z, st.eta, st.gamma, st.sigma, q_hat, theta, p, c, S);
            const Vec eta_new = update_eta(t_new, z_new, st.eta, st.gamma, st.sigma, c, S);
            const double gamma_new = update_gamma(t_new, z_new, st.eta, st.gamma, st.sigma, c, S);
            st.z = z_new;
            st.t = t_new;
            st.eta = eta_new;
            st.gamma = gamma_new;
        } else {
            // Without the norm term the level block minimizes
            // q_hat'z - zeta'z + (c/2)||pi - z||^2 exactly.
            st.z = pi_vec + (zeta_vec - q_hat) / c;
        }
        st.iteration = k;

        if (config.keep_message_log)
            for (int s = 0; s < S; ++s) {
                Message m;
                m.direction = Message::Direction::to_client;
                m.iteration = k;
                m.client_id = clients[static_cast<std::size_t>(s)].client_id;
                m.payload.resize(2 * n + 2);
                m.payload << st.w, st.z[s], cst[static_cast<std::size_t>(s)].psi,
                    cst[static_cast<std::size_t>(s)].zeta;
                rec.messages.push_back(std::move(m));
            }

        // Mini-batch subsets are drawn serially so runs are reproducible for
        // a given seed regardless of the thread count.
        std::vector<std::vector<int>> subsets;
        std::vector<ClientDataset> subs;
        if (minibatch) {
            subsets.resize(static_cast<std::size_t>(S));
            subs.resize(static_cast<std::size_t>(S));
            for (int s = 0; s < S; ++s) {
                subsets[static_cast<std::size_t>(s)] =
                    draw_subset(rng, sizes[static_cast<std::size_t>(s)], *config.minibatch_size);
                subs[static_cast<std::size_t>(s)] =
                    take_subset(clients[static_cast<std::size_t>(s)], subsets[static_cast<std::size_t>(s)]);
            }
        }

        std::vector<ClientUpdateResult> outs(static_cast<std::size_t>(S));
        for_each_client(S, config.threads, [&](int s) {
            const std::size_t us = static_cast<std::size_t>(s);
            const ClientState& cl = cst[us];
            if (minibatch) {
                ClientLayout lay;
                ConvexProgram prog;
                prog.cs = client_system(spec, rho[s], subs[us], &lay);
                prog.P = client_quadratic(prog.cs, lay, n, c);
                client_cost(lay, prog.cs.num_vars(), st.w, st.z[s], cl.psi, cl.zeta, c, &prog.q,
                            &prog.r0);
                SolveResult res = solve_convex(prog, kClientTol);
                ensure_solved(res, client_context(subs[us].client_id));
                outs[us] = extract_client(rho[s], lay, n, res);
                outs[us].subset = subsets[us];
            } else {
                outs[us] = engines[us].step(clients[us], rho[s], st.w, st.z[s], cl.psi, cl.zeta, c);
            }
        });

        for (int s = 0; s < S; ++s) {
            const std::size_t us = static_cast<std::size_t>(s);
            ClientState& cl = cst[us];
            cl.x = outs[us].x;
            cl.y = outs[us].y;
            cl.w_hat = outs[us].w_hat;
            cl.pi = outs[us].pi;
            pi_now[s] = outs[us].pi;
        }
        if (minibatch) rec.minibatch_subsets.push_back(std::move(subsets));

        if (config.keep_message_log)
            for (int s = 0; s < S; ++s) {
                Message m;
                m.direction = Message::Direction::to_server;
                m.iteration = k;
                m.client_id = clients[static_cast<std::size_t>(s)].client_id;
                m.payload.resize(n + 1);
                m.payload << pi_now[s], cst[static_cast<std::size_t>(s)].w_hat;
                rec.messages.push_back(std::move(m));
            }

        if (coupled) {
            dual_update(st, cst, c);
        } else {
            for (int s = 0; s < S; ++s) {
                ClientState& cl = cst[static_cast<std::size_t>(s)];
                cl.psi += c * (st.w - cl.w_hat);
                cl.zeta += c * (cl.pi - st.z[s]);
            }
        }

        double r_coupling = 0.0;
        if (coupled)
            r_coupling = inf_norm(st.t - st.z - ones_times(S, st.gamma) - st.eta);
        double r_consensus = 0.0;
        double r_level = 0.0;
        for (int s = 0; s < S; ++s) {
            const ClientState& cl = cst[static_cast<std::size_t>(s)];
            r_consensus = std::max(r_consensus, inf_norm(st.w - cl.w_hat));
            r_level = std::max(r_level, std::abs(cl.pi - st.z[s]));
        }
        rec.res_coupling.push_back(r_coupling);
        rec.res_consensus.push_back(r_consensus);
        rec.res_level.push_back(r_level);

        const double ob = mixture_objective(q_hat, st.z, st.eta, st.gamma, theta, p);
        rec.objective.push_back(ob);

        double shift = std::max(inf_norm(st.w - w_prev), inf_norm(st.z - z_prev));
        if (coupled) {
            shift = std::max({shift, inf_norm(st.t - t_prev), inf_norm(st.eta - eta_prev),
                              std::abs(st.gamma - gamma_prev)});
        }
        for (int s = 0; s < S; ++s) {
            const std::size_t us = static_cast<std::size_t>(s);
            shift = std::max(shift, inf_norm(cst[us].w_hat - what_list[us]));
            shift = std::max(shift, std::abs(pi_now[s] - pi_vec[s]));
        }
        const double dual_surrogate = c * shift;

        if (trace.is_open())
            trace << k << ',' << ob << ',' << r_coupling << ',' << r_consensus << ',' << r_level
                  << ',' << elapsed_ms() << '\n';

        const double metric = std::max({r_coupling, r_consensus, r_level});
        if (metric < best_metric) {
            best_metric = metric;
            best_state = st;
            best_pi = pi_now;
        }

        if (metric < config.tol_primal && dual_surrogate < config.tol_dual) {
            converged = true;
            break;
        }
    }

    rec.iterations = static_cast<int>(rec.objective.size());
    rec.converged = converged;
    rec.wall_time_ms = elapsed_ms();
    if (converged) {
        rec.final_state = st;
        rec.final_pi = pi_now;
    } else {
        rec.final_state = best_state;
        rec.final_pi = best_pi;
    }

    SolveOutput out;
    out.w = rec.final_state.w;
    out.record = std::move(rec);
    return out;
}

}  // namespace drfl
