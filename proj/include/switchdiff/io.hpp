#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "switchdiff/config.hpp"
#include "switchdiff/experiments.hpp"

namespace switchdiff {

// One invocation's worth of results, keyed by suite id in run order.
using SuiteResults = std::vector<std::pair<std::string, SuiteOutput>>;

// Canonical machine interface. Doubles are emitted with enough digits to
// round-trip exactly: reports_from_json(reports_to_json(r)) == r.
std::string reports_to_json(const RunConfig& cfg, const SuiteResults& results);
SuiteResults reports_from_json(const std::string& json_text);

// Fixed, versioned CSV columns:
//   check_id,suite,claim,estimate,threshold,margin,ci_lo,ci_hi,verdict,config_hash,seed
void write_reports_csv(std::ostream& os, const SuiteResults& results);

// Drift-estimate table:
//   y_radius,m,estimate,se,ci_lo,ci_hi,n,verdict
void write_drift_csv(std::ostream& os, const SuiteResults& results);

}  // namespace switchdiff
