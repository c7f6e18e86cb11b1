#pragma once

#include "drfl/types.hpp"

namespace drfl {

// Pointwise loss L(<w, x>, y) for the given family. Throws on dimension
// mismatch or on an epsilon that the family does not accept.
double loss_eval(const LossSpec& loss, const Vec& w, const Sample& sample);

// Mean of loss_eval over the client's samples.
double empirical_loss(const LossSpec& loss, const Vec& w, const ClientDataset& client);

}  // namespace drfl
