#pragma once

#include "drfl/constraint_system.hpp"
#include "drfl/types.hpp"

namespace drfl {

// Feasible set of (lambda, alpha, w, auxiliaries) such that
// rho * lambda + e'alpha / N_s upper-bounds the client's worst-case expected
// loss over the transport ball. Variable blocks are laid out in the order
// "lambda", "alpha", "w", then family-specific auxiliaries. Throws
// std::invalid_argument for (loss, support) pairs with no convex
// reformulation.
ConstraintSystem build_omega(const LossSpec& loss, const SupportSpec& support,
                             double kappa, NormKind metric_norm,
                             const ClientDataset& client);

// Epigraph system for the empirical program (transport radius zero):
// loss_i(w) <= alpha_i per sample. Shares the ("lambda", "alpha", "w", ...)
// layout of build_omega with lambda pinned to zero, so the same objective
// vector applies with rho = 0.
ConstraintSystem build_empirical_epigraph(const LossSpec& loss, const ClientDataset& client);

// inf { rho * lambda + e'alpha / N_s } over the omega set with w held fixed.
// rho = 0 returns the empirical mean loss directly. Throws SolveError (with
// residuals) if the inner solver fails to converge.
double worst_case_client_loss(const Vec& w, const ClientDataset& client, double rho,
                              double kappa, NormKind metric_norm, const LossSpec& loss,
                              const SupportSpec& support, double tol = 1e-8);

// Convenience overload reading rho / kappa / metric from a RobustnessSpec;
// client_index selects the entry of rob.rho (0-based).
double worst_case_client_loss(const Vec& w, const ClientDataset& client,
                              const RobustnessSpec& rob, int client_index,
                              const LossSpec& loss, const SupportSpec& support,
                              double tol = 1e-8);

}  // namespace drfl
