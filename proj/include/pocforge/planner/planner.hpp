#pragma once

#include <string>
#include <vector>

#include "pocforge/llm/gateway.hpp"
#include "pocforge/planner/scanner.hpp"
#include "pocforge/planner/types.hpp"

namespace pocforge::planner {

/// Schema-guided extraction of structured insight from the CVE text. Also
/// derives the targeted search queries used downstream.
struct InsightResult {
    VulnerabilityInsight insight;
    std::vector<std::string> search_queries;
};

InsightResult extract_insight(const VulnerabilityReport& report, llm::Gateway& gateway);

/// Cross product of vulnerability-type synonyms and key APIs, capped at 10.
std::vector<std::string> derive_search_queries(const VulnerabilityInsight& insight);

/// Scans the repo, filters findings by insight keywords, and extracts
/// endpoint/parameter/payload hints. Sorted by confidence descending, ties by
/// file path then line ascending.
std::vector<CodeEvidence> analyze_code(const VulnerabilityReport& report,
                                       const VulnerabilityInsight& insight,
                                       ScannerAdapter& scanner);

/// Summaries of prior reward records, injected into the replanning prompt.
struct PlanningContext {
    std::vector<std::string> experience_summaries;
};

ExploitationPlan generate_plan(const VulnerabilityInsight& insight,
                               const std::vector<CodeEvidence>& evidence,
                               const ToolRegistry& registry, llm::Gateway& gateway,
                               const PlanningContext& context = {});

/// Built-in payload templates per vulnerability type; empty for unknown types.
std::vector<std::string> payload_hint(const std::string& vulnerability_type);

/// Default success markers embedded into every oracle config.
std::vector<std::string> default_success_markers();

/// Evidence regexes derived from the vulnerability type.
std::vector<std::string> evidence_patterns_for(const std::string& vulnerability_type);

}  // namespace pocforge::planner
