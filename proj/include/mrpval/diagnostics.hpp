#pragma once

#include <vector>

namespace mrpval::diagnostics {

// chains[c][i] is iteration i of chain c; all chains have equal length >= 4.
using Chains = std::vector<std::vector<double>>;

// Rank-normalized split R-hat (max of bulk and folded versions).
double rhat(const Chains& chains);

double bulk_ess(const Chains& chains);

// Minimum ESS of the 5% and 95% quantile indicators.
double tail_ess(const Chains& chains);

// Plain (non-normalized) split R-hat, exposed for tests.
double split_rhat_basic(const Chains& chains);

// ESS of the chains as given (no splitting or normalization).
double ess_basic(const Chains& chains);

}  // namespace mrpval::diagnostics
