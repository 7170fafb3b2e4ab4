#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace strata {

struct ValidationOptions {
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: one per hardware thread
  // Real-embedding check; skipped when no matrix is given.
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> vocab;
};

enum class CheckStatus { pass, fail, skip };
std::string to_string(CheckStatus s);

struct CheckResult {
  int criterion = 0;
  std::string name;
  bool gating = true;
  CheckStatus status = CheckStatus::fail;
  std::string summary;
  nlohmann::json details;
  double seconds = 0;
};

/// Check names in criterion order:
/// manifold-iqr, median-tolerance, curvature-sign, stratified, disk-boundary,
/// estimator-oracles, knn-performance, real-embeddings.
const std::vector<std::string>& check_names();

/// Runs the named checks (all when `only` is empty) in criterion order.
/// Failures are reported, never thrown; unknown names throw InvalidArgument.
std::vector<CheckResult> run_validation(const ValidationOptions& options,
                                        const std::vector<std::string>& only = {});

/// True when no gating check failed.
bool all_gating_passed(const std::vector<CheckResult>& results);

nlohmann::json validation_json(const std::vector<CheckResult>& results,
                               const ValidationOptions& options);

/// "criterion N name: PASS|FAIL|SKIP - summary"
std::string format_result_line(const CheckResult& r);

}  // namespace strata
