#include "revmix/analyzer.hpp"

#include "revmix/errors.hpp"
#include "revmix/util.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace revmix {

namespace pt = boost::property_tree;

const char* to_string(Analyzer analyzer) {
    return analyzer == Analyzer::Pmd ? "pmd" : "checkstyle";
}

const char* to_string(RuleCategory category) {
    switch (category) {
    case RuleCategory::BestPractices: return "best_practices";
    case RuleCategory::CodingStyle: return "coding_style";
    case RuleCategory::Design: return "design";
    case RuleCategory::Documentation: return "documentation";
    case RuleCategory::ErrorProne: return "error_prone";
    case RuleCategory::MultiThreading: return "multi_threading";
    case RuleCategory::Performance: return "performance";
    case RuleCategory::Security: return "security";
    case RuleCategory::Other: return "other";
    }
    return "other";
}

Analyzer analyzer_from_string(std::string_view text) {
    const std::string lower = to_lower(text);
    if (lower == "pmd")
        return Analyzer::Pmd;
    if (lower == "checkstyle")
        return Analyzer::Checkstyle;
    throw InvalidInput("unknown analyzer: " + std::string(text));
}

RuleCategory category_from_string(std::string_view text) {
    // tolerate "Code Style", "code-style", "CODE_STYLE" spellings
    std::string key;
    for (char c : to_lower(text))
        if (c != ' ' && c != '_' && c != '-')
            key += c;
    if (key == "bestpractices") return RuleCategory::BestPractices;
    if (key == "codestyle" || key == "codingstyle") return RuleCategory::CodingStyle;
    if (key == "design") return RuleCategory::Design;
    if (key == "documentation") return RuleCategory::Documentation;
    if (key == "errorprone") return RuleCategory::ErrorProne;
    if (key == "multithreading") return RuleCategory::MultiThreading;
    if (key == "performance") return RuleCategory::Performance;
    if (key == "security") return RuleCategory::Security;
    return RuleCategory::Other;
}

CategoryMap CategoryMap::defaults() {
    CategoryMap map;
    map.add("naming", RuleCategory::CodingStyle);
    map.add("whitespace", RuleCategory::CodingStyle);
    map.add("import", RuleCategory::CodingStyle);
    map.add("javadoc", RuleCategory::Documentation);
    return map;
}

CategoryMap CategoryMap::load(const std::filesystem::path& path) {
    CategoryMap map;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        const std::string entry = trim(line);
        if (entry.empty() || entry[0] == '#')
            continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError("bad category mapping line: " + entry);
        const std::string fragment = trim(entry.substr(0, eq));
        const std::string category = trim(entry.substr(eq + 1));
        if (fragment.empty())
            throw ConfigError("empty fragment in category mapping: " + entry);
        map.add(fragment, category_from_string(category));
    }
    return map;
}

void CategoryMap::add(std::string fragment, RuleCategory category) {
    rules_.emplace_back(to_lower(fragment), category);
}

RuleCategory CategoryMap::categorize(std::string_view rule_source) const {
    const std::string lower = to_lower(rule_source);
    for (const auto& [fragment, category] : rules_)
        if (lower.find(fragment) != std::string::npos)
            return category;
    return RuleCategory::Other;
}

namespace {

void sort_findings(std::vector<Finding>& findings) {
    std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        if (a.file_path != b.file_path)
            return a.file_path < b.file_path;
        if (a.span.start != b.span.start)
            return a.span.start < b.span.start;
        return a.rule_id < b.rule_id;
    });
}

std::string digest_file_set(const std::vector<Finding>& findings) {
    std::set<std::string> names;
    for (const Finding& f : findings)
        names.insert(f.file_path);
    std::uint64_t h = fnv1a("analyzed-files");
    for (const std::string& name : names)
        h = fnv1a(name + "\n", h);
    return hex64(h);
}

pt::ptree parse_xml(std::string_view text) {
    std::istringstream in{std::string(text)};
    pt::ptree tree;
    try {
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw MalformedReport(std::string("XML parse failure: ") + e.what());
    }
    return tree;
}

long attr_line(const pt::ptree& node, const char* name, const char* what) {
    auto value = node.get_optional<long>("<xmlattr>." + std::string(name));
    if (!value)
        throw MalformedReport(std::string("missing mandatory attribute '") + name + "' on " +
                              what);
    if (*value < 1)
        throw MalformedReport(std::string("attribute '") + name + "' out of range on " + what);
    return *value;
}

// <pmd><file name=...><violation beginline=.. endline=.. rule=.. ruleset=..
// priority=..>message</violation></file></pmd>
std::vector<Finding> parse_pmd(const pt::ptree& tree) {
    auto root = tree.get_child_optional("pmd");
    if (!root)
        throw MalformedReport("not a PMD report: missing <pmd> root");
    std::vector<Finding> findings;
    for (const auto& [name, file_node] : *root) {
        if (name != "file")
            continue;
        auto file_name = file_node.get_optional<std::string>("<xmlattr>.name");
        if (!file_name || file_name->empty())
            throw MalformedReport("PMD <file> element without name attribute");
        for (const auto& [child_name, violation] : file_node) {
            if (child_name != "violation")
                continue;
            Finding finding;
            finding.analyzer = Analyzer::Pmd;
            finding.file_path = *file_name;
            finding.span.start = attr_line(violation, "beginline", "violation");
            finding.span.end = violation.get<long>("<xmlattr>.endline", finding.span.start);
            if (finding.span.end < finding.span.start)
                finding.span.end = finding.span.start;
            auto rule = violation.get_optional<std::string>("<xmlattr>.rule");
            if (!rule || rule->empty())
                throw MalformedReport("PMD violation without rule attribute");
            finding.rule_id = *rule;
            finding.category =
                category_from_string(violation.get<std::string>("<xmlattr>.ruleset", "other"));
            finding.severity = static_cast<int>(violation.get<long>("<xmlattr>.priority", 3));
            finding.message = trim(violation.get_value<std::string>());
            if (finding.message.empty())
                throw MalformedReport("PMD violation with empty message (rule " +
                                      finding.rule_id + ")");
            findings.push_back(std::move(finding));
        }
    }
    return findings;
}

// <checkstyle><file name=...><error line=.. column=.. severity=.. message=..
// source=../></file></checkstyle>
std::vector<Finding> parse_checkstyle(const pt::ptree& tree, const CategoryMap& categories) {
    auto root = tree.get_child_optional("checkstyle");
    if (!root)
        throw MalformedReport("not a Checkstyle report: missing <checkstyle> root");
    std::vector<Finding> findings;
    for (const auto& [name, file_node] : *root) {
        if (name != "file")
            continue;
        auto file_name = file_node.get_optional<std::string>("<xmlattr>.name");
        if (!file_name || file_name->empty())
            throw MalformedReport("Checkstyle <file> element without name attribute");
        for (const auto& [child_name, error] : file_node) {
            if (child_name != "error")
                continue;
            Finding finding;
            finding.analyzer = Analyzer::Checkstyle;
            finding.file_path = *file_name;
            finding.span.start = attr_line(error, "line", "error");
            finding.span.end = finding.span.start;
            auto message = error.get_optional<std::string>("<xmlattr>.message");
            if (!message || message->empty())
                throw MalformedReport("Checkstyle error without message attribute");
            finding.message = *message;
            auto source = error.get_optional<std::string>("<xmlattr>.source");
            if (!source || source->empty())
                throw MalformedReport("Checkstyle error without source attribute");
            const auto dot = source->find_last_of('.');
            finding.rule_id = dot == std::string::npos ? *source : source->substr(dot + 1);
            finding.category = categories.categorize(*source);
            const std::string severity = error.get<std::string>("<xmlattr>.severity", "warning");
            finding.severity = severity == "error" ? 1 : severity == "warning" ? 2 : 3;
            findings.push_back(std::move(finding));
        }
    }
    return findings;
}

} // namespace

AnalyzerReport parse_report(ReportFormat format, std::string_view text,
                            const CategoryMap& categories) {
    const pt::ptree tree = parse_xml(text);
    AnalyzerReport report;
    if (format == ReportFormat::PmdXml) {
        report.analyzer = Analyzer::Pmd;
        report.findings = parse_pmd(tree);
    } else {
        report.analyzer = Analyzer::Checkstyle;
        report.findings = parse_checkstyle(tree, categories);
    }
    sort_findings(report.findings);
    report.source_digest = digest_file_set(report.findings);
    return report;
}

std::vector<Finding> filter_findings_to_change(const std::vector<Finding>& findings,
                                               const CodeChange& change, long slack) {
    if (slack < 0)
        slack = 0;
    std::vector<LineSpan> windows;
    for (const LineSpan& span : changed_line_spans(change, DiffSide::New))
        windows.push_back(span.expanded(slack));

    std::vector<Finding> kept;
    for (const Finding& finding : findings) {
        if (finding.file_path != change.file_path)
            continue;
        const bool hits = std::any_of(windows.begin(), windows.end(), [&](const LineSpan& w) {
            return w.intersects(finding.span);
        });
        if (hits)
            kept.push_back(finding);
    }
    return kept;
}

ReviewRecord finding_to_review(const Finding& finding, const SourceFile& file, long context) {
    const CodeSnippet snippet = extract_snippet(file, finding.span, context);
    ReviewRecord record;
    record.file_path = file.path;
    record.change = snippet_to_pseudo_diff(file.path, snippet);
    record.review = "[" + finding.rule_id + "] " + finding.message;
    record.source = ReviewSource::Kbs;
    record.rule_id = finding.rule_id;
    return record;
}

AnalyzerReport run_analyzer_exec(ReportFormat format, const std::string& command,
                                 std::chrono::milliseconds timeout,
                                 const CategoryMap& categories) {
    const ExecResult result = run_command_capture(command, timeout);
    if (result.timed_out)
        throw TimeoutError("analyzer command timed out: " + command);
    if (result.output.empty())
        throw MalformedReport("analyzer command produced no output: " + command);
    return parse_report(format, result.output, categories);
}

} // namespace revmix
