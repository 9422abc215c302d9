#pragma once

#include <string>

#include "gamlss/model.hpp"

namespace gamlss {

/// Versioned JSON rendering of a fitted model: family, links, coefficient
/// blocks, smoother states, inference matrices, and the df ledger —
/// everything prediction and diagnosis need. The per-row vectors (linear
/// predictors and fitted parameter values) are not stored; they are exact
/// recomputations via predict on the training data.
std::string serialize_model(const FittedModel& fm);

/// Inverse of serialize_model. Throws SchemaError on malformed documents,
/// unsupported format_version, or inconsistent block sizes.
FittedModel deserialize_model(const std::string& text);

void save_model(const std::string& path, const FittedModel& fm);
FittedModel load_model(const std::string& path);

} // namespace gamlss
