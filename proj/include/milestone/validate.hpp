#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace milestone {

/// Outcome of one acceptance criterion. `details` holds every number the verdict used.
struct CriterionResult {
  std::string id;
  bool passed = false;
  std::string summary;
  nlohmann::json details;
  double seconds = 0.0;
};

struct ValidationOptions {
  std::uint64_t seed = 20240601;
  int workers = 1;
  /// Multiplies every sampling budget. Minimum counts stay fixed, so scaling down can fail them.
  double budget_scale = 1.0;
  /// Subset of criterion ids; empty runs all.
  std::vector<std::string> criteria;
};

/// A1 ... A10.
const std::vector<std::string>& criterion_ids();

/// Runs the selected criteria in id order and reports each result as soon as it is known.
/// Criteria sharing a setup (A1, A8, A10) reuse one sampling run.
std::vector<CriterionResult> run_validation(const ValidationOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

nlohmann::json to_json(const CriterionResult& r);

}  // namespace milestone
