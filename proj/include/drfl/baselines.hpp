#pragma once

#include "drfl/admm.hpp"
#include "drfl/types.hpp"

#include <vector>

namespace drfl {

// Pooled empirical-risk fit: minimizes the uniform average of per-client mean
// losses through the pooled epigraph program at accuracy tol_primal. The
// record is a one-shot summary: iterations = 1, objective holds the final
// value, final_pi carries each client's empirical mean loss at the solution,
// and the residual arrays are singleton zeros.
SolveOutput solve_erm(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                      const SolverConfig& config);

// Worst-mixture baseline: the federated solve with every client radius pinned
// to zero, keeping the weight ball around q_hat. Requires theta > 0.
SolveOutput solve_afl(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                      const SolverConfig& config);

// Worst-client baseline: the zero-radius solve run with an l1 weight ball
// wide enough to cover the whole simplex (radius 2), so the mixture maximum
// sits at the hardest client regardless of q_hat.
SolveOutput solve_drfa(const ProblemSpec& spec, const std::vector<ClientDataset>& clients,
                       const SolverConfig& config);

}  // namespace drfl
