#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pocforge/planner/types.hpp"

namespace pocforge::planner {

/// Raw static-analysis finding, before keyword filtering.
struct ScanFinding {
    std::string path;  // relative to the scanned repo
    int line = 0;
    std::string rule_id;
    std::string severity;
    std::string snippet;
};

class ScannerAdapter {
public:
    virtual ~ScannerAdapter() = default;
    virtual std::vector<ScanFinding> scan(const std::filesystem::path& repo,
                                          const std::vector<std::string>& keywords) = 0;
};

/// Hermetic regex/keyword scanner over the repository tree. Findings are one
/// per (file, line) that mentions any insight keyword.
class BuiltinScanner : public ScannerAdapter {
public:
    std::vector<ScanFinding> scan(const std::filesystem::path& repo,
                                  const std::vector<std::string>& keywords) override;
};

/// External command-line scanner. The command is invoked with the repo path
/// appended and must emit a JSON array of
/// {path, line, rule_id, severity, snippet} on stdout.
class CommandScanner : public ScannerAdapter {
public:
    explicit CommandScanner(std::vector<std::string> command);

    std::vector<ScanFinding> scan(const std::filesystem::path& repo,
                                  const std::vector<std::string>& keywords) override;

private:
    std::vector<std::string> command_;
};

}  // namespace pocforge::planner
