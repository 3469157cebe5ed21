#pragma once

#include <string>
#include <vector>

#include "pocforge/exec/executor.hpp"
#include "pocforge/llm/gateway.hpp"
#include "pocforge/oracle/config.hpp"
#include "pocforge/planner/types.hpp"

namespace pocforge::oracle {

enum class Outcome { confirmed, rejected, ambiguous };
enum class Layer { L1, L2, L3, differential };

const char* outcome_name(Outcome outcome);
const char* layer_name(Layer layer);

struct OracleVerdict {
    Outcome outcome = Outcome::ambiguous;
    Layer layer = Layer::L1;
    double confidence = 0.0;
    std::vector<std::string> evidence;
};

/// Progressive verification engine. Counters track layer invocations so tests
/// can assert the escalation discipline.
class OracleEngine {
public:
    struct Stats {
        std::int64_t l1_calls = 0;
        std::int64_t l2_calls = 0;
        std::int64_t l3_calls = 0;
    };

    /// L1: exit codes, timeouts, fatal stderr patterns.
    OracleVerdict verify_l1(const exec::ExecutionResult& result, const OracleConfig& config);

    /// L2: success markers in stdout, evidence regexes over stdout+stderr.
    OracleVerdict verify_l2(const exec::ExecutionResult& result, const OracleConfig& config);

    /// L3: structured judge call; fail-closed when the judge is unavailable.
    OracleVerdict verify_l3(const exec::ExecutionResult& result,
                            const planner::VulnerabilityInsight& context,
                            llm::Gateway& gateway);

    /// L1 -> L2 -> L3 with short-circuit on the first decision.
    OracleVerdict verify(const exec::ExecutionResult& result, const OracleConfig& config,
                         const planner::VulnerabilityInsight& context, llm::Gateway& gateway);

    /// Specificity check: confirmed iff the artifact confirms on the vulnerable
    /// environment and does not confirm on the patched one.
    OracleVerdict differential_check(const exec::PoCArtifact& artifact,
                                     const exec::SandboxSpec& vulnerable_env,
                                     const exec::SandboxSpec& patched_env,
                                     const OracleConfig& config,
                                     const planner::VulnerabilityInsight& context,
                                     llm::Gateway& gateway);

    const Stats& stats() const { return stats_; }

private:
    Stats stats_;
};

}  // namespace pocforge::oracle
