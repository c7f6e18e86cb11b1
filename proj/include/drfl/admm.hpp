#pragma once

#include "drfl/inner_solver.hpp"
#include "drfl/rng.hpp"
#include "drfl/types.hpp"

#include <string>
#include <vector>

namespace drfl {

// One hop across the server/client boundary. Payloads are packed flat:
//   to_client : [w (n) | z_s | psi_s (n) | zeta_s]   -> 2n + 2 values
//   to_server : [pi_s | w_hat_s (n)]                 -> n + 1 values
// A client reports exactly its level value and its local model copy; samples,
// alpha, and auxiliary variables never cross the boundary.
struct Message {
    enum class Direction { to_client, to_server };
    Direction direction = Direction::to_client;
    int iteration = 0;  // 1-based iteration tag
    int client_id = 0;  // ClientDataset::client_id
    Vec payload;
};

using MessageLog = std::vector<Message>;

// Throws std::logic_error naming the first offending entry if any to_server
// payload holds anything other than exactly n + 1 values, or any to_client
// payload differs from 2n + 2 values.
void audit_message_log(const MessageLog& log, int n);

// Convergence trace of one federated solve.
struct RunRecord {
    // Infinity norms of the three coupling residuals at the end of each
    // iteration; every array has length `iterations`.
    //   res_coupling[k]  = ||t - z - gamma e - eta||_inf   (identically 0 when theta = 0)
    //   res_consensus[k] = max_s ||w - w_hat_s||_inf
    //   res_level[k]     = max_s |pi_s - z_s|
    std::vector<double> res_coupling;
    std::vector<double> res_consensus;
    std::vector<double> res_level;
    // Mixture objective q_hat'(z + eta) + theta ||z + gamma e + eta||_{p*}
    // per iteration, with eta clamped to nonnegative before evaluating.
    std::vector<double> objective;
    int iterations = 0;
    bool converged = false;
    double wall_time_ms = 0.0;
    // Server blocks of the returned iterate; when the run stopped at the
    // iteration cap this is the visited iterate with the smallest maximum
    // primal residual, not necessarily the last one.
    SolverState final_state;
    // Client-reported levels at the returned iterate. The solver drives
    // pi_s - z_s to zero but the two are distinct until convergence, so both
    // are recorded (z sits in final_state.z).
    Vec final_pi;
    // Chosen sample indices per iteration and client (mini-batch runs only).
    std::vector<std::vector<std::vector<int>>> minibatch_subsets;
    MessageLog messages;  // populated when SolverConfig::keep_message_log
};

struct SolveOutput {
    Vec w;
    RunRecord record;
};

// Server-side primal operators. All of them validate dimensions and throw
// std::invalid_argument on mismatch; c must be positive.

// Average of the local models corrected by their consensus duals:
// (1/(cS)) sum_s (c w_hat_s - psi_s).
Vec update_w(const std::vector<Vec>& w_hat, const std::vector<Vec>& psi, double c);

// Proximal step for the level vector. t_bar / z_bar are the previous
// iterates; pi holds each client's last reported level.
// (1/(1+2S)) [pi + t_bar - z_bar - gamma e - eta + 2S z_bar + (zeta + sigma)/c].
Vec update_z(const Vec& t_bar, const Vec& z_bar, const Vec& eta, double gamma,
             const Vec& pi, const Vec& zeta, const Vec& sigma, double c, int S);

// Proximal step of the scaled dual norm (requires theta > 0):
// u - (theta/(2Sc)) Proj_{B_p}(2Sc u / theta) with
// u = t_bar - (q_hat + sigma + c (t_bar - z_bar - gamma e - eta)) / (2Sc).
Vec update_t(const Vec& t_bar, const Vec& z_bar, const Vec& eta, double gamma,
             const Vec& sigma, const Vec& q_hat, double theta, NormKind p,
             double c, int S);

// Clipped proximal step for the slack block; t and z are the fresh iterates
// while eta_bar / gamma_bar are the previous ones:
// [eta_bar + (1/(2S)) (sigma/c - gamma_bar e - eta_bar + t - z)]_+.
Vec update_eta(const Vec& t, const Vec& z, const Vec& eta_bar, double gamma_bar,
               const Vec& sigma, double c, int S);

// Scalar companion of update_eta:
// gamma_bar + (1 + sigma'e + c (-gamma_bar e - eta_bar + t - z)'e) / (2Sc).
double update_gamma(const Vec& t, const Vec& z, const Vec& eta_bar, double gamma_bar,
                    const Vec& sigma, double c, int S);

// Gradient-ascent step on all duals at the current iterates:
//   sigma  += c (t - z - gamma e - eta)
//   psi_s  += c (w - w_hat_s)
//   zeta_s += c (pi_s - z_s)
// using each client's reported pi and w_hat.
void dual_update(SolverState& state, std::vector<ClientState>& clients, double c);

// Result of one client subproblem solve. `x`/`y` are the full subproblem
// primal/dual in its variable layout, kept for warm starts.
struct ClientUpdateResult {
    double lambda = 0.0;  // 0 on the empirical branch (rho_s = 0)
    Vec alpha;
    Vec w_hat;
    double pi = 0.0;        // rho_s lambda + mean(alpha), recomputed exactly
    double objective = 0.0; // subproblem objective at the solution
    Vec x;
    Vec y;
    std::vector<int> subset;  // chosen sample indices (mini-batch only)
};

// The client subproblem as a standalone program: the client's feasible-set
// rows plus a scalar "level" variable v tied to rho_s lambda + mean(alpha) by
// an equality row, minimizing
//   zeta v - psi'w_hat + (c/2)||w - w_hat||^2 + (c/2)(v - z_s)^2.
// Blocks follow the feasible-set layout ("lambda", "alpha", "w", ...);
// the level variable is the trailing block "level".
ConvexProgram build_client_subproblem(const ProblemSpec& spec, double rho_s,
                                      const ClientDataset& data, const Vec& w,
                                      double z_s, const Vec& psi, double zeta,
                                      double c);

// Solves the client subproblem for the client at 0-based position s (selects
// robustness.rho[s]). `warm` may carry the previous iteration's x/y for the
// same program shape. Inner non-convergence is rethrown with the client id.
ClientUpdateResult client_update(int s, const Vec& w, double z_s, const Vec& psi,
                                 double zeta, const ProblemSpec& spec,
                                 const ClientDataset& data, double c,
                                 const ClientState* warm = nullptr);

// Mini-batch variant: draws a fresh uniform subset of subset_size sample
// indices (without replacement) from `rng`, builds the subproblem on that
// subset only, and reports alpha of length subset_size. subset_size = N_s
// reproduces client_update exactly.
ClientUpdateResult client_update_minibatch(int s, const Vec& w, double z_s,
                                           const Vec& psi, double zeta,
                                           const ProblemSpec& spec,
                                           const ClientDataset& data, double c,
                                           int subset_size, Rng& rng);

// Federated solve of the mixture problem. Server and client blocks start at
// zero; each iteration runs the server operators (w, z, t, eta, gamma), the S
// independent client subproblems, and the dual ascent step, in that order.
// theta = 0 drops the norm term from the objective and runs a reduced loop
// without the t / eta / gamma blocks. Stops when the largest primal residual
// falls below tol_primal while the successive-iterate dual surrogate
// (stepsize times the largest block change) falls below tol_dual; hitting
// max_iters returns the best visited iterate with converged = false.
SolveOutput solve_drfl(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                       const SolverConfig& config);

}  // namespace drfl
