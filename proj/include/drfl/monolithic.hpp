#pragma once

#include "drfl/inner_solver.hpp"
#include "drfl/types.hpp"

#include <vector>

namespace drfl {

// Joint single-program forms of the training problems: every client's rows
// are assembled into one ConvexProgram over a shared weight vector. These are
// desk-scale cross-checks for the federated solver — exact, not distributed,
// and deliberately unconcerned with the federation boundary.
//
// Variable layout: "w" first; then each client's blocks with an "_s<k>"
// suffix (lambda, alpha, auxiliaries), k being the 1-based client position;
// then the mixture blocks "z", "eta", "gamma" and the norm epigraph "tau"
// (plus "tau_aux" when the weight-ball norm is linf).

// Robust mixture program: minimize q_hat'(z + eta) + theta * tau with
// tau >= ||z + gamma e + eta||_* (dual norm of the weight-ball norm), subject
// to z_s = rho_s lambda_s + mean(alpha_s) and the client's robust constraint
// set (empirical epigraph rows when rho_s = 0). With theta = 0 the eta /
// gamma / tau blocks drop out and the objective is q_hat'z.
ConvexProgram build_joint_program(const ProblemSpec& spec, const std::vector<ClientDataset>& clients);

// Worst-client epigraph: minimize gamma subject to the per-client empirical
// mean losses z_s <= gamma.
ConvexProgram build_worst_client_program(const LossSpec& loss, const std::vector<ClientDataset>& clients);

// Pooled empirical objective (1/S) sum_s mean(alpha_s) over empirical
// epigraph rows; the non-robust training program.
ConvexProgram build_pooled_empirical_program(const LossSpec& loss, const std::vector<ClientDataset>& clients);

struct JointSolution {
    Vec w;
    double objective = 0.0;
    SolveResult result;  // full iterate in the joint layout
};

// Build-and-solve helpers; throw SolveError unless the solve reports optimal.
JointSolution solve_joint(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                          double tol = 1e-8);
JointSolution solve_worst_client(const LossSpec& loss, const std::vector<ClientDataset>& clients,
                                 double tol = 1e-8);
JointSolution solve_pooled_empirical(const LossSpec& loss, const std::vector<ClientDataset>& clients,
                                     double tol = 1e-8);

}  // namespace drfl
