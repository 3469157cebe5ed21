#include "pocforge/planner/planner.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace pocforge::planner {

namespace fs = std::filesystem;
using llm::CompletionRequest;
using llm::Role;
using nlohmann::json;

namespace {

std::string normalize_type(const std::string& type) {
    std::string out;
    for (char c : type) {
        if (c == '_' || c == '-') out += ' ';
        else out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<std::string> type_synonyms(const std::string& normalized) {
    if (normalized == "prototype pollution") return {"prototype pollution", "__proto__"};
    if (normalized == "command injection") return {"command injection", "shell injection"};
    if (normalized == "code injection") return {"code injection", "eval injection"};
    if (normalized == "path traversal") return {"path traversal", "directory traversal"};
    if (normalized == "redos" || normalized == "regular expression denial of service")
        return {"redos", "catastrophic backtracking"};
    if (normalized == "sql injection") return {"sql injection", "sqli"};
    return {normalized};
}

}  // namespace

std::vector<std::string> payload_hint(const std::string& vulnerability_type) {
    const std::string t = normalize_type(vulnerability_type);
    if (t == "prototype pollution")
        return {"__proto__.polluted=yes", "constructor.prototype.polluted=yes"};
    if (t == "command injection")
        return {"; echo INJECTED_OK", "$(echo INJECTED_OK)", "| echo INJECTED_OK"};
    if (t == "path traversal")
        return {"../../../../etc/passwd", "..%2f..%2f..%2fetc%2fpasswd"};
    if (t == "code injection")
        return {"${require('child_process').execSync('echo INJECTED_OK')}",
                "process.mainModule.require('child_process')"};
    if (t == "redos" || t == "regular expression denial of service")
        return {"aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa!"};
    if (t == "sql injection") return {"' OR '1'='1' --"};
    return {};
}

std::vector<std::string> default_success_markers() {
    return {"POC_SUCCESS", "EXPLOIT_SUCCESS", "VULNERABILITY_TRIGGERED"};
}

std::vector<std::string> evidence_patterns_for(const std::string& vulnerability_type) {
    const std::string t = normalize_type(vulnerability_type);
    if (t == "prototype pollution")
        return {R"(Object\.prototype\.[A-Za-z_]+)", "polluted"};
    if (t == "command injection") return {"INJECTED_OK", R"(uid=[0-9]+)"};
    if (t == "path traversal") return {R"(root:.*:0:0:)", "TRAVERSAL_OK"};
    if (t == "code injection") return {"INJECTED_OK"};
    return {};
}

std::vector<std::string> derive_search_queries(const VulnerabilityInsight& insight) {
    std::vector<std::string> queries;
    const auto synonyms = type_synonyms(normalize_type(insight.vulnerability_type));
    for (const auto& syn : synonyms) {
        for (const auto& api : insight.key_apis) {
            if (queries.size() >= 10) return queries;
            queries.push_back(syn + " " + api);
        }
    }
    if (queries.empty()) queries.push_back(normalize_type(insight.vulnerability_type));
    return queries;
}

InsightResult extract_insight(const VulnerabilityReport& report, llm::Gateway& gateway) {
    report.validate();
    CompletionRequest req;
    req.response_schema = "vulnerability_insight";
    req.add(Role::system,
            "You are a vulnerability analyst. Extract a structured insight from the "
            "report as JSON with fields: vulnerability_type, attack_vector, "
            "vulnerable_params, key_apis, entry_points, summary.");
    std::ostringstream body;
    body << "Task: extract vulnerability insight\n"
         << "CVE: " << report.cve_id << "\n"
         << "Package: " << report.package << "@" << report.version << "\n"
         << "Description: " << report.description << "\n";
    for (const auto& [k, v] : report.metadata) body << k << ": " << v << "\n";
    req.add(Role::user, body.str());

    InsightResult out;
    out.insight = gateway.complete_structured(req).get<VulnerabilityInsight>();
    out.search_queries = derive_search_queries(out.insight);
    return out;
}

namespace {

struct RouteAnnotation {
    int line;
    std::string endpoint;
};

std::vector<RouteAnnotation> find_routes(const fs::path& file) {
    static const std::regex route_re(
        R"((app|router|server)\.(get|post|put|delete|all)\(\s*['"]([^'"]+)['"])");
    std::vector<RouteAnnotation> routes;
    std::ifstream in(file);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::smatch m;
        if (std::regex_search(line, m, route_re)) routes.push_back({lineno, m[3]});
    }
    return routes;
}

std::optional<std::string> extract_parameter(const std::string& snippet) {
    static const std::regex param_re(R"((?:query|params|body)\.([A-Za-z_][A-Za-z0-9_]*))");
    std::smatch m;
    if (std::regex_search(snippet, m, param_re)) return m[1].str();
    return std::nullopt;
}

}  // namespace

std::vector<CodeEvidence> analyze_code(const VulnerabilityReport& report,
                                       const VulnerabilityInsight& insight,
                                       ScannerAdapter& scanner) {
    const auto keywords = insight.keywords();
    std::vector<ScanFinding> findings = scanner.scan(report.repo_path, keywords);

    std::vector<CodeEvidence> evidence;
    const auto templates = payload_hint(insight.vulnerability_type);
    std::map<std::string, std::vector<RouteAnnotation>> routes_per_file;

    for (const auto& finding : findings) {
        std::set<std::string> matched;
        for (const auto& kw : keywords)
            if (!kw.empty() && finding.snippet.find(kw) != std::string::npos)
                matched.insert(kw);
        if (matched.empty()) continue;

        CodeEvidence ev;
        ev.file = finding.path;
        ev.line = finding.line;
        ev.confidence = std::min(0.95, 0.5 + 0.1 * static_cast<double>(matched.size()));
        ev.parameter = extract_parameter(finding.snippet);

        const fs::path abs = report.repo_path / finding.path;
        if (fs::is_regular_file(abs)) {
            auto it = routes_per_file.find(finding.path);
            if (it == routes_per_file.end())
                it = routes_per_file.emplace(finding.path, find_routes(abs)).first;
            const RouteAnnotation* best = nullptr;
            for (const auto& route : it->second)
                if (route.line <= finding.line) best = &route;
            if (!best && !it->second.empty()) best = &it->second.front();
            if (best) ev.endpoint = best->endpoint;
        }
        if (!templates.empty()) ev.payload_hint = templates.front();
        evidence.push_back(std::move(ev));
    }

    std::sort(evidence.begin(), evidence.end(),
              [](const CodeEvidence& a, const CodeEvidence& b) {
                  if (a.confidence != b.confidence) return a.confidence > b.confidence;
                  if (a.file != b.file) return a.file < b.file;
                  return a.line < b.line;
              });
    return evidence;
}

ExploitationPlan generate_plan(const VulnerabilityInsight& insight,
                               const std::vector<CodeEvidence>& evidence,
                               const ToolRegistry& registry, llm::Gateway& gateway,
                               const PlanningContext& context) {
    if (registry.empty())
        throw Error(ErrorCode::config_error, "tool registry is empty");

    CompletionRequest req;
    req.response_schema = "exploitation_plan";
    req.add(Role::system,
            "You are an exploitation planner. Reply with JSON: {steps: "
            "[{description, tool_id}], payloads: [string], success_markers?: "
            "[string], evidence_patterns?: [string], expect_nonzero_exit?: bool}. "
            "Use only the listed tool ids.");
    std::ostringstream body;
    body << "Task: generate exploitation plan\n"
         << "Insight: " << json(insight).dump() << "\n"
         << "Evidence: " << json(evidence).dump() << "\n"
         << "Tools:\n";
    for (const auto& tool : registry.list_tools())
        body << "- " << tool.tool_id << " [" << executor_backend_name(tool.executor_backend)
             << "]: " << tool.capability_description << "\n";
    const auto templates = payload_hint(insight.vulnerability_type);
    if (!templates.empty()) {
        body << "Payload templates:\n";
        for (const auto& t : templates) body << "- " << t << "\n";
    }
    if (!context.experience_summaries.empty()) {
        body << "Prior experience:\n";
        for (const auto& s : context.experience_summaries) body << "- " << s << "\n";
    }
    req.add(Role::user, body.str());

    json reply;
    std::string bad_tool;
    for (int round = 0; round <= llm::Gateway::kRepairRetries; ++round) {
        reply = gateway.complete_structured(req);
        bad_tool.clear();
        for (const auto& step : reply["steps"]) {
            const auto tool_id = step["tool_id"].get<std::string>();
            if (!registry.contains(tool_id)) {
                bad_tool = tool_id;
                break;
            }
        }
        if (bad_tool.empty()) break;
        req.add(Role::assistant, reply.dump());
        req.add(Role::user, "Tool '" + bad_tool +
                                "' is not registered. Use only the listed tool ids.");
    }
    if (!bad_tool.empty())
        throw Error(ErrorCode::unknown_tool_in_plan,
                    "plan references unregistered tool: " + bad_tool);

    ExploitationPlan plan;
    plan.insight = insight;
    plan.evidence = evidence;
    for (const auto& step : reply["steps"])
        plan.steps.push_back({step["description"].get<std::string>(),
                              step["tool_id"].get<std::string>()});
    plan.payloads = reply.value("payloads", std::vector<std::string>{});

    // Known vulnerability types always carry at least one canonical payload.
    if (!templates.empty()) {
        const bool covered = std::any_of(
            plan.payloads.begin(), plan.payloads.end(), [&](const std::string& p) {
                return std::any_of(templates.begin(), templates.end(),
                                   [&](const std::string& t) {
                                       return p.find(t.substr(0, 8)) != std::string::npos;
                                   });
            });
        if (!covered) plan.payloads.push_back(templates.front());
    }

    plan.oracle_config.success_markers = default_success_markers();
    for (const auto& m : reply.value("success_markers", std::vector<std::string>{}))
        if (std::find(plan.oracle_config.success_markers.begin(),
                      plan.oracle_config.success_markers.end(),
                      m) == plan.oracle_config.success_markers.end())
            plan.oracle_config.success_markers.push_back(m);
    plan.oracle_config.evidence_patterns = evidence_patterns_for(insight.vulnerability_type);
    for (const auto& p : reply.value("evidence_patterns", std::vector<std::string>{}))
        plan.oracle_config.evidence_patterns.push_back(p);
    plan.oracle_config.fatal_patterns = oracle::default_fatal_patterns();
    const std::string t = normalize_type(insight.vulnerability_type);
    plan.oracle_config.expect_nonzero_exit = reply.value(
        "expect_nonzero_exit",
        t == "redos" || t == "regular expression denial of service");

    plan.chosen_executor = ExecutorBackend::local_process;
    for (const auto& step : plan.steps)
        if (registry.get(step.tool_id).executor_backend == ExecutorBackend::container)
            plan.chosen_executor = ExecutorBackend::container;

    plan.plan_id = "plan-" + llm::request_digest(req).substr(0, 12);
    return plan;
}

}  // namespace pocforge::planner
