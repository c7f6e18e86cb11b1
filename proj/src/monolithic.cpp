#include "drfl/monolithic.hpp"

#include "drfl/model.hpp"
#include "drfl/omega.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drfl {

namespace {

LinExpr remap_expr(const LinExpr& a, const std::vector<int>& map) {
    LinExpr out;
    out.reserve(a.size());
    for (const LinTerm& t : a) out.push_back({map[t.idx], t.coef});
    return out;
}

// Copies every block of `part` except the shared "w" into `cs` under an
// "_s<k>" suffix, remapping bounds and all row families. Returns the index
// map from part variables to joint variables.
std::vector<int> graft_client(ConstraintSystem& cs, const ConstraintSystem& part, int k) {
    std::vector<int> map(part.num_vars(), -1);
    for (const auto& b : part.layout.blocks()) {
        if (b.name == "w") {
            for (int j = 0; j < b.size; ++j) map[b.offset + j] = cs.layout.index("w", j);
            continue;
        }
        const int off = cs.add_var(b.name + "_s" + std::to_string(k), b.size);
        for (int j = 0; j < b.size; ++j) {
            map[b.offset + j] = off + j;
            cs.set_bounds(off + j, part.lb[b.offset + j], part.ub[b.offset + j]);
        }
    }
    for (const LinRow& r : part.lin) cs.lin.push_back({remap_expr(r.a, map), r.lo, r.hi});
    for (const QuadRow& r : part.quad)
        cs.quad.push_back({remap_expr(r.a, map), r.a0, remap_expr(r.c, map), r.c0});
    for (const LseRow& r : part.lse)
        cs.lse.push_back({remap_expr(r.a, map), r.a0, remap_expr(r.c, map), r.c0});
    for (const SocRow& r : part.soc) {
        SocRow out;
        out.u.reserve(r.u.size());
        for (const auto& comp : r.u) out.u.emplace_back(remap_expr(comp.first, map), comp.second);
        out.c = remap_expr(r.c, map);
        out.c0 = r.c0;
        cs.soc.push_back(std::move(out));
    }
    cs.n_epigraph_rows += part.n_epigraph_rows;
    cs.n_dual_norm_rows += part.n_dual_norm_rows;
    return map;
}

void check_clients(const std::vector<ClientDataset>& clients, const char* context) {
    if (clients.empty()) throw std::invalid_argument(std::string(context) + ": no clients");
    const int n = clients[0].dim();
    for (const ClientDataset& c : clients) {
        if (c.size() == 0) throw std::invalid_argument(std::string(context) + ": empty client");
        if (c.dim() != n)
            throw std::invalid_argument(std::string(context) + ": feature dimension mismatch across clients");
    }
}

// Mean-of-alpha equality rows tying z_s to each client's reported level.
void add_level_row(ConstraintSystem& cs, const ConstraintSystem& part, const std::vector<int>& map,
                   double rho_s, int i_z) {
    LinExpr row;
    if (rho_s > 0.0) row.push_back({map[part.layout.index("lambda")], rho_s});
    const auto& alpha = part.layout.block("alpha");
    for (int i = 0; i < alpha.size; ++i)
        row.push_back({map[alpha.offset + i], 1.0 / static_cast<double>(alpha.size)});
    row.push_back({i_z, -1.0});
    cs.add_eq(std::move(row), 0.0);
}

JointSolution finish(ConvexProgram&& prog, double tol, const char* context) {
    const int n = prog.cs.layout.block("w").size;
    const int iw = prog.cs.layout.index("w");
    JointSolution out;
    out.result = ensure_solved(solve_convex(prog, tol), context);
    out.w = out.result.x.segment(iw, n);
    out.objective = out.result.objective;
    return out;
}

}  // namespace

ConvexProgram build_joint_program(const ProblemSpec& spec, const std::vector<ClientDataset>& clients) {
    check_clients(clients, "joint program");
    const int S = static_cast<int>(clients.size());
    if (spec.robustness.rho.size() != S)
        throw std::invalid_argument("joint program: radius count does not match client count");
    const int n = clients[0].dim();

    ConvexProgram prog;
    ConstraintSystem& cs = prog.cs;
    cs.add_var("w", n);

    std::vector<ConstraintSystem> parts;
    std::vector<std::vector<int>> maps;
    parts.reserve(S);
    maps.reserve(S);
    for (int s = 0; s < S; ++s) {
        const double rho_s = spec.robustness.rho[s];
        if (rho_s < 0.0) throw std::invalid_argument("joint program: negative radius");
        parts.push_back(rho_s > 0.0
                            ? build_omega(spec.loss, spec.support, spec.robustness.kappa,
                                          spec.robustness.metric_norm, clients[s])
                            : build_empirical_epigraph(spec.loss, clients[s]));
        maps.push_back(graft_client(cs, parts.back(), s + 1));
    }

    const int i_z = cs.add_var("z", S);
    for (int s = 0; s < S; ++s) add_level_row(cs, parts[s], maps[s], spec.robustness.rho[s], i_z + s);

    std::vector<int> sizes;
    sizes.reserve(S);
    for (const ClientDataset& c : clients) sizes.push_back(c.size());
    const Vec q_hat = resolve_q_hat(spec.weights, sizes);
    const double theta = spec.weights.theta;

    int i_eta = -1, i_gamma = -1, i_tau = -1;
    if (theta > 0.0) {
        i_eta = cs.add_var("eta", S, 0.0, kInf);
        i_gamma = cs.add_var("gamma", 1);
        i_tau = cs.add_var("tau", 1);
        switch (spec.weights.p) {
            case NormKind::l1:  // dual norm linf: tau bounds every coordinate
                for (int s = 0; s < S; ++s) {
                    cs.add_le({{i_z + s, 1.0}, {i_gamma, 1.0}, {i_eta + s, 1.0}, {i_tau, -1.0}}, 0.0);
                    cs.add_le({{i_z + s, -1.0}, {i_gamma, -1.0}, {i_eta + s, -1.0}, {i_tau, -1.0}}, 0.0);
                }
                break;
            case NormKind::l2: {
                SocRow row;
                for (int s = 0; s < S; ++s)
                    row.u.emplace_back(LinExpr{{i_z + s, 1.0}, {i_gamma, 1.0}, {i_eta + s, 1.0}}, 0.0);
                row.c = {{i_tau, 1.0}};
                cs.soc.push_back(std::move(row));
                break;
            }
            case NormKind::linf: {  // dual norm l1: tau bounds the coordinate sum
                const int i_aux = cs.add_var("tau_aux", S, 0.0, kInf);
                LinExpr sum;
                for (int s = 0; s < S; ++s) {
                    cs.add_le({{i_z + s, 1.0}, {i_gamma, 1.0}, {i_eta + s, 1.0}, {i_aux + s, -1.0}}, 0.0);
                    cs.add_le({{i_z + s, -1.0}, {i_gamma, -1.0}, {i_eta + s, -1.0}, {i_aux + s, -1.0}}, 0.0);
                    sum.push_back({i_aux + s, 1.0});
                }
                sum.push_back({i_tau, -1.0});
                cs.add_le(std::move(sum), 0.0);
                break;
            }
        }
    }

    prog.q = Vec::Zero(cs.num_vars());
    for (int s = 0; s < S; ++s) {
        prog.q[i_z + s] = q_hat[s];
        if (i_eta >= 0) prog.q[i_eta + s] = q_hat[s];
    }
    if (i_tau >= 0) prog.q[i_tau] = theta;
    return prog;
}

ConvexProgram build_worst_client_program(const LossSpec& loss, const std::vector<ClientDataset>& clients) {
    check_clients(clients, "worst-client program");
    const int S = static_cast<int>(clients.size());
    const int n = clients[0].dim();

    ConvexProgram prog;
    ConstraintSystem& cs = prog.cs;
    cs.add_var("w", n);
    std::vector<ConstraintSystem> parts;
    std::vector<std::vector<int>> maps;
    for (int s = 0; s < S; ++s) {
        parts.push_back(build_empirical_epigraph(loss, clients[s]));
        maps.push_back(graft_client(cs, parts.back(), s + 1));
    }
    const int i_z = cs.add_var("z", S);
    const int i_gamma = cs.add_var("gamma", 1);
    for (int s = 0; s < S; ++s) {
        add_level_row(cs, parts[s], maps[s], 0.0, i_z + s);
        cs.add_le({{i_z + s, 1.0}, {i_gamma, -1.0}}, 0.0);
    }
    prog.q = Vec::Zero(cs.num_vars());
    prog.q[i_gamma] = 1.0;
    return prog;
}

ConvexProgram build_pooled_empirical_program(const LossSpec& loss,
                                             const std::vector<ClientDataset>& clients) {
    check_clients(clients, "pooled empirical program");
    const int S = static_cast<int>(clients.size());
    const int n = clients[0].dim();

    ConvexProgram prog;
    ConstraintSystem& cs = prog.cs;
    cs.add_var("w", n);
    prog.q = Vec();
    std::vector<std::pair<int, double>> costs;
    for (int s = 0; s < S; ++s) {
        const ConstraintSystem part = build_empirical_epigraph(loss, clients[s]);
        const std::vector<int> map = graft_client(cs, part, s + 1);
        const auto& alpha = part.layout.block("alpha");
        for (int i = 0; i < alpha.size; ++i)
            costs.emplace_back(map[alpha.offset + i], 1.0 / (static_cast<double>(S) * alpha.size));
    }
    prog.q = Vec::Zero(cs.num_vars());
    for (const auto& [idx, c] : costs) prog.q[idx] = c;
    return prog;
}

JointSolution solve_joint(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                          double tol) {
    return finish(build_joint_program(spec, clients), tol, "joint program");
}

JointSolution solve_worst_client(const LossSpec& loss, const std::vector<ClientDataset>& clients,
                                 double tol) {
    return finish(build_worst_client_program(loss, clients), tol, "worst-client program");
}

JointSolution solve_pooled_empirical(const LossSpec& loss, const std::vector<ClientDataset>& clients,
                                     double tol) {
    return finish(build_pooled_empirical_program(loss, clients), tol, "pooled empirical program");
}

}  // namespace drfl
