#pragma once

#include "revmix/diff.hpp"
#include "revmix/review.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace revmix {

enum class Analyzer { Pmd, Checkstyle };

enum class RuleCategory {
    BestPractices,
    CodingStyle,
    Design,
    Documentation,
    ErrorProne,
    MultiThreading,
    Performance,
    Security,
    Other,  // rules whose category is absent from the report
};

const char* to_string(Analyzer analyzer);
const char* to_string(RuleCategory category);
Analyzer analyzer_from_string(std::string_view text);
RuleCategory category_from_string(std::string_view text);

/// One rule violation from an analyzer report.
struct Finding {
    Analyzer analyzer = Analyzer::Pmd;
    std::string rule_id;
    RuleCategory category = RuleCategory::Other;
    std::string message;
    std::string file_path;
    LineSpan span;
    int severity = 1;  // 1 = highest

    bool operator==(const Finding&) const = default;
};

struct AnalyzerReport {
    Analyzer analyzer = Analyzer::Pmd;
    std::vector<Finding> findings;  // sorted by (file_path, span.start, rule_id)
    std::string source_digest;      // hash of the analyzed file set
};

enum class ReportFormat { PmdXml, CheckstyleXml };

/// Rule-name fragment -> category table for analyzers whose reports carry no
/// category of their own (Checkstyle). Fragments match case-insensitively
/// against the full rule source string; first hit wins.
class CategoryMap {
public:
    static CategoryMap defaults();
    static CategoryMap load(const std::filesystem::path& path);  // "fragment = category" lines

    void add(std::string fragment, RuleCategory category);
    RuleCategory categorize(std::string_view rule_source) const;

private:
    std::vector<std::pair<std::string, RuleCategory>> rules_;
};

/// Parses a PMD or Checkstyle XML report into findings in canonical order.
/// Throws MalformedReport on XML errors or missing mandatory attributes.
AnalyzerReport parse_report(ReportFormat format, std::string_view text,
                            const CategoryMap& categories = CategoryMap::defaults());

/// Findings whose span intersects the new-side changed lines of `change`
/// widened by `slack` lines; input order preserved.
std::vector<Finding> filter_findings_to_change(const std::vector<Finding>& findings,
                                               const CodeChange& change, long slack);

/// Finding -> analyzer-sourced review record: "[rule] message" text plus an
/// addition-only pseudo-diff of the snippet around the finding span.
ReviewRecord finding_to_review(const Finding& finding, const SourceFile& file, long context);

/// Exec mode: run a configured analyzer command line and parse its stdout.
AnalyzerReport run_analyzer_exec(ReportFormat format, const std::string& command,
                                 std::chrono::milliseconds timeout,
                                 const CategoryMap& categories = CategoryMap::defaults());

} // namespace revmix
