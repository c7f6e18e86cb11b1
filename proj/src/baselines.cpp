#include "drfl/baselines.hpp"

#include "drfl/losses.hpp"
#include "drfl/monolithic.hpp"

#include <chrono>
#include <stdexcept>

namespace drfl {

SolveOutput solve_erm(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                      const SolverConfig& config) {
    if (clients.empty()) throw std::invalid_argument("erm: no clients");
    for (const ClientDataset& c : clients) {
        if (c.size() == 0) throw std::invalid_argument("erm: client has no samples");
        if (c.dim() != clients.front().dim())
            throw std::invalid_argument("erm: feature dimension mismatch across clients");
    }
    if (!(config.tol_primal > 0.0)) throw std::invalid_argument("erm: tolerance must be positive");

    const auto t0 = std::chrono::steady_clock::now();
    const JointSolution js = solve_pooled_empirical(spec.loss, clients, config.tol_primal);

    SolveOutput out;
    out.w = js.w;
    RunRecord& rec = out.record;
    rec.iterations = 1;
    rec.converged = true;  // solve_pooled_empirical throws otherwise
    rec.objective = {js.objective};
    rec.res_coupling = {0.0};
    rec.res_consensus = {0.0};
    rec.res_level = {0.0};
    rec.final_state.w = js.w;
    const int S = static_cast<int>(clients.size());
    rec.final_pi = Vec(S);
    for (int s = 0; s < S; ++s)
        rec.final_pi[s] = empirical_loss(spec.loss, js.w, clients[static_cast<std::size_t>(s)]);
    rec.final_state.z = rec.final_pi;
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

SolveOutput solve_afl(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                      const SolverConfig& config) {
    if (!(spec.weights.theta > 0.0))
        throw std::invalid_argument("afl: requires a positive weight ball radius");
    ProblemSpec reduced = spec;
    reduced.robustness.rho.setZero();
    return solve_drfl(reduced, clients, config);
}

SolveOutput solve_drfa(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                       const SolverConfig& config) {
    ProblemSpec reduced = spec;
    reduced.robustness.rho.setZero();
    // The l1 diameter of the simplex is 2, so this ball always contains it.
    reduced.weights.theta = 2.0;
    reduced.weights.p = NormKind::l1;
    return solve_drfl(reduced, clients, config);
}

}  // namespace drfl
