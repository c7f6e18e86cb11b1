#pragma once

#include "drfl/types.hpp"

#include <string>
#include <vector>

namespace drfl {

// to_string for LossFamily/SupportKind/NormKind is declared in types.hpp.
const char* to_string(Task t);
const char* to_string(QHatMode m);

LossFamily loss_family_from_string(const std::string& s);
SupportKind support_kind_from_string(const std::string& s);
NormKind norm_kind_from_string(const std::string& s);
QHatMode q_hat_mode_from_string(const std::string& s);

// Schema-level checks: parameter applicability and ranges, shape coherence of
// the polyhedral support, strict-interior check, simplex membership.
// Returns an empty list iff the spec is valid. Does not mutate the spec, so
// validation is idempotent by construction.
std::vector<std::string> validate(const ProblemSpec& spec);

// Additionally checks the spec against concrete client data: per-client radii
// count, feature dimensions, label encoding, nonempty clients.
std::vector<std::string> validate(const ProblemSpec& spec, const std::vector<ClientDataset>& clients);

std::vector<std::string> validate(const SolverConfig& cfg, const std::vector<ClientDataset>& clients);

// True iff the support set admits a point satisfying every row strictly.
// Boxes and unbounded supports trivially qualify; polyhedral supports are
// checked with a small max-slack linear program.
bool has_strict_interior(const SupportSpec& support, Task task, std::string* detail = nullptr);

// Materializes the mixture center: uniform, proportional to client sizes, or
// the explicitly supplied vector.
Vec resolve_q_hat(const WeightSetSpec& weights, const std::vector<int>& client_sizes);

}  // namespace drfl
