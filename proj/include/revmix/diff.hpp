#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace revmix {

/// 1-based inclusive line range.
struct LineSpan {
    long start = 1;
    long end = 1;

    long length() const { return end - start + 1; }
    bool contains(long line) const { return line >= start && line <= end; }
    bool intersects(const LineSpan& other) const {
        return start <= other.end && other.start <= end;
    }
    LineSpan expanded(long by) const {
        return {start - by < 1 ? 1 : start - by, end + by};
    }
    auto operator<=>(const LineSpan&) const = default;
};

struct SourceFile {
    std::string path;                // forward-slash relative path
    std::vector<std::string> lines;  // index 0 holds line 1

    static SourceFile from_text(std::string path, std::string_view text);
    long line_count() const { return static_cast<long>(lines.size()); }
    const std::string& line(long number) const;  // throws SpanOutOfBounds
};

enum class LineMarker { Context, Added, Removed };

struct HunkLine {
    LineMarker marker = LineMarker::Context;
    std::string text;
    bool operator==(const HunkLine&) const = default;
};

struct Hunk {
    long old_start = 0;
    long old_len = 0;
    long new_start = 0;
    long new_len = 0;
    std::vector<HunkLine> lines;

    bool operator==(const Hunk&) const = default;
    bool has_change() const;
};

/// A single-file unified diff. Hunks are sorted by old_start and do not
/// overlap in old-file coordinates.
struct CodeChange {
    std::string file_path;
    std::vector<Hunk> hunks;
    bool operator==(const CodeChange&) const = default;
};

struct CodeSnippet {
    LineSpan span;                  // the requested span
    std::vector<std::string> text;  // span plus the included context lines
    long context_before = 0;
    long context_after = 0;
};

enum class DiffSide { Old, New };

/// Parses a unified diff for exactly one file. Accepts git-style headers;
/// throws MalformedDiff on bad headers, marker lines or count mismatches.
CodeChange parse_unified_diff(std::string_view text);

/// Canonical text form: "--- a/path", "+++ b/path", then hunks with explicit
/// lengths and "\n" endings. parse(render(x)) == x for every valid change.
std::string render_unified_diff(const CodeChange& change);

/// Maximal disjoint spans of removed (old side) or added (new side) lines,
/// ascending; adjacent runs are coalesced across hunk boundaries.
std::vector<LineSpan> changed_line_spans(const CodeChange& change, DiffSide side);

/// Span plus up to `context` lines each side, clamped at the file edges.
CodeSnippet extract_snippet(const SourceFile& file, LineSpan span, long context);

struct MergeOptions {
    long context = 3;     // context lines kept around rebuilt hunks
    long fusion_gap = 6;  // fuse change clusters whose gap is <= this many lines
};

/// Union of two changes to the same file against the same base content.
/// The result's changed-line sets equal the per-side unions of the inputs';
/// overlapping or near-adjacent regions fuse into one hunk. Throws
/// FileMismatch on different paths and BaseConflict when the inputs assert
/// different content for the same line.
CodeChange merge_union_diff(const CodeChange& a, const CodeChange& b,
                            const MergeOptions& opts = {});

/// Rebuilds a change through the merge layout; merge(a, a) == canonicalize(a).
CodeChange canonicalize(const CodeChange& change, const MergeOptions& opts = {});

/// Snippet rendered as an addition-only pseudo-diff (the change segment
/// attached to analyzer reviews).
CodeChange snippet_to_pseudo_diff(const std::string& file_path, const CodeSnippet& snippet);

} // namespace revmix
