#include "revmix/diff.hpp"

#include "revmix/errors.hpp"
#include "revmix/util.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <map>
#include <utility>

namespace revmix {

SourceFile SourceFile::from_text(std::string path, std::string_view text) {
    SourceFile file;
    file.path = std::move(path);
    file.lines = split_lines(text);
    return file;
}

const std::string& SourceFile::line(long number) const {
    if (number < 1 || number > line_count())
        throw SpanOutOfBounds("line " + std::to_string(number) + " outside " + path + " (" +
                              std::to_string(line_count()) + " lines)");
    return lines[static_cast<std::size_t>(number - 1)];
}

bool Hunk::has_change() const {
    return std::any_of(lines.begin(), lines.end(),
                       [](const HunkLine& l) { return l.marker != LineMarker::Context; });
}

namespace {

std::string strip_diff_prefix(std::string path) {
    if (path.size() > 2 && (path[0] == 'a' || path[0] == 'b') && path[1] == '/')
        return path.substr(2);
    return path;
}

// path portion of a "--- " / "+++ " line; anything after a tab is a timestamp
std::string parse_file_header_path(std::string_view rest) {
    auto tab = rest.find('\t');
    if (tab != std::string_view::npos)
        rest = rest.substr(0, tab);
    return trim(rest);
}

bool read_number(std::string_view line, std::size_t& pos, long& out) {
    if (pos >= line.size() || !std::isdigit(static_cast<unsigned char>(line[pos])))
        return false;
    long value = 0;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
        value = value * 10 + (line[pos] - '0');
        if (value > 1000000000L)
            return false;
        ++pos;
    }
    out = value;
    return true;
}

// "@@ -old_start[,old_len] +new_start[,new_len] @@" with optional section text
// Hunks must ascend in old-file coordinates. A zero-old-length hunk may
// anchor on the previous hunk's last old line (insertion right after it);
// anything else has to start strictly past it.
bool hunks_ordered(const Hunk& prev, const Hunk& cur) {
    const long prev_end = prev.old_len > 0 ? prev.old_start + prev.old_len - 1 : prev.old_start;
    if (cur.old_start > prev_end)
        return true;
    return cur.old_len == 0 && prev.old_len > 0 && cur.old_start == prev_end;
}

bool parse_hunk_header(std::string_view line, Hunk& hunk) {
    if (!line.starts_with("@@ -"))
        return false;
    std::size_t pos = 4;
    if (!read_number(line, pos, hunk.old_start))
        return false;
    hunk.old_len = 1;
    if (pos < line.size() && line[pos] == ',') {
        ++pos;
        if (!read_number(line, pos, hunk.old_len))
            return false;
    }
    if (pos + 1 >= line.size() || line[pos] != ' ' || line[pos + 1] != '+')
        return false;
    pos += 2;
    if (!read_number(line, pos, hunk.new_start))
        return false;
    hunk.new_len = 1;
    if (pos < line.size() && line[pos] == ',') {
        ++pos;
        if (!read_number(line, pos, hunk.new_len))
            return false;
    }
    return line.substr(pos).starts_with(" @@");
}

} // namespace

CodeChange parse_unified_diff(std::string_view text) {
    if (trim(text).empty())
        throw MalformedDiff("empty diff text");
    const std::vector<std::string> lines = split_lines(text);

    // Skip leading chatter (git's "diff --git", index and mode lines) up to
    // the "---" file header.
    std::size_t i = 0;
    std::string old_path;
    bool saw_old = false;
    for (; i < lines.size(); ++i) {
        if (lines[i].starts_with("--- ")) {
            old_path = parse_file_header_path(std::string_view(lines[i]).substr(4));
            saw_old = true;
            ++i;
            break;
        }
        if (lines[i].starts_with("@@ "))
            throw MalformedDiff("hunk appears before the file header");
    }
    if (!saw_old)
        throw MalformedDiff("missing file header (--- line)");
    if (i >= lines.size() || !lines[i].starts_with("+++ "))
        throw MalformedDiff("missing file header (+++ line)");
    std::string new_path = parse_file_header_path(std::string_view(lines[i]).substr(4));
    ++i;

    std::string path = (new_path == "/dev/null") ? old_path : new_path;
    if (path == "/dev/null")
        throw MalformedDiff("both header paths are /dev/null");
    path = strip_diff_prefix(std::move(path));
    if (path.empty())
        throw MalformedDiff("empty file path in header");

    CodeChange change;
    change.file_path = std::move(path);

    while (i < lines.size()) {
        const std::string& line = lines[i];
        if (trim(line).empty()) {
            std::size_t j = i;
            while (j < lines.size() && trim(lines[j]).empty())
                ++j;
            if (j == lines.size())
                break;
            throw MalformedDiff("unexpected blank line between hunks");
        }
        if (line.starts_with("\\")) {  // "\ No newline at end of file"
            ++i;
            continue;
        }
        Hunk hunk;
        if (!parse_hunk_header(line, hunk))
            throw MalformedDiff("bad hunk header: " + line);
        if ((hunk.old_len > 0 && hunk.old_start < 1) || (hunk.new_len > 0 && hunk.new_start < 1))
            throw MalformedDiff("hunk start 0 with nonzero length: " + line);
        ++i;

        long old_remaining = hunk.old_len;
        long new_remaining = hunk.new_len;
        while (old_remaining > 0 || new_remaining > 0) {
            if (i >= lines.size())
                throw MalformedDiff("hunk body ends before the counts in its header");
            const std::string& body = lines[i];
            ++i;
            if (body.starts_with("\\"))
                continue;
            const char marker = body.empty() ? ' ' : body[0];
            std::string content = body.empty() ? std::string() : body.substr(1);
            switch (marker) {
            case ' ':
                if (old_remaining <= 0 || new_remaining <= 0)
                    throw MalformedDiff("line counts do not match hunk header");
                hunk.lines.push_back({LineMarker::Context, std::move(content)});
                --old_remaining;
                --new_remaining;
                break;
            case '-':
                if (old_remaining <= 0)
                    throw MalformedDiff("line counts do not match hunk header");
                hunk.lines.push_back({LineMarker::Removed, std::move(content)});
                --old_remaining;
                break;
            case '+':
                if (new_remaining <= 0)
                    throw MalformedDiff("line counts do not match hunk header");
                hunk.lines.push_back({LineMarker::Added, std::move(content)});
                --new_remaining;
                break;
            default:
                throw MalformedDiff("bad marker in hunk body: " + body);
            }
        }
        if (!hunk.has_change())
            throw MalformedDiff("hunk contains no added or removed line");
        change.hunks.push_back(std::move(hunk));
    }

    for (std::size_t k = 1; k < change.hunks.size(); ++k) {
        if (!hunks_ordered(change.hunks[k - 1], change.hunks[k]))
            throw MalformedDiff("hunks overlap or are unordered in old-file coordinates");
    }
    return change;
}

std::string render_unified_diff(const CodeChange& change) {
    std::string out;
    out += "--- a/" + change.file_path + "\n";
    out += "+++ b/" + change.file_path + "\n";
    for (const Hunk& hunk : change.hunks) {
        out += "@@ -" + std::to_string(hunk.old_start) + "," + std::to_string(hunk.old_len) +
               " +" + std::to_string(hunk.new_start) + "," + std::to_string(hunk.new_len) +
               " @@\n";
        for (const HunkLine& line : hunk.lines) {
            switch (line.marker) {
            case LineMarker::Context: out += ' '; break;
            case LineMarker::Added: out += '+'; break;
            case LineMarker::Removed: out += '-'; break;
            }
            out += line.text;
            out += '\n';
        }
    }
    return out;
}

std::vector<LineSpan> changed_line_spans(const CodeChange& change, DiffSide side) {
    std::vector<long> numbers;
    for (const Hunk& hunk : change.hunks) {
        long old_pos = hunk.old_start;
        long new_pos = hunk.new_start;
        for (const HunkLine& line : hunk.lines) {
            switch (line.marker) {
            case LineMarker::Context:
                ++old_pos;
                ++new_pos;
                break;
            case LineMarker::Removed:
                if (side == DiffSide::Old)
                    numbers.push_back(old_pos);
                ++old_pos;
                break;
            case LineMarker::Added:
                if (side == DiffSide::New)
                    numbers.push_back(new_pos);
                ++new_pos;
                break;
            }
        }
    }
    std::sort(numbers.begin(), numbers.end());
    numbers.erase(std::unique(numbers.begin(), numbers.end()), numbers.end());

    std::vector<LineSpan> spans;
    for (long n : numbers) {
        if (!spans.empty() && spans.back().end + 1 == n)
            spans.back().end = n;
        else
            spans.push_back({n, n});
    }
    return spans;
}

CodeSnippet extract_snippet(const SourceFile& file, LineSpan span, long context) {
    if (span.start < 1 || span.end < span.start)
        throw SpanOutOfBounds("invalid span " + std::to_string(span.start) + ".." +
                              std::to_string(span.end));
    if (span.end > file.line_count())
        throw SpanOutOfBounds("span " + std::to_string(span.start) + ".." +
                              std::to_string(span.end) + " outside " + file.path + " (" +
                              std::to_string(file.line_count()) + " lines)");
    if (context < 0)
        context = 0;
    const long lo = std::max(1L, span.start - context);
    const long hi = std::min(file.line_count(), span.end + context);

    CodeSnippet snippet;
    snippet.span = span;
    snippet.context_before = span.start - lo;
    snippet.context_after = hi - span.end;
    snippet.text.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (long n = lo; n <= hi; ++n)
        snippet.text.push_back(file.lines[static_cast<std::size_t>(n - 1)]);
    return snippet;
}

CodeChange snippet_to_pseudo_diff(const std::string& file_path, const CodeSnippet& snippet) {
    CodeChange change;
    change.file_path = file_path;
    if (snippet.text.empty())
        return change;
    Hunk hunk;
    const long first = snippet.span.start - snippet.context_before;
    hunk.old_start = first - 1;
    hunk.old_len = 0;
    hunk.new_start = first;
    hunk.new_len = static_cast<long>(snippet.text.size());
    for (const auto& text : snippet.text)
        hunk.lines.push_back({LineMarker::Added, text});
    change.hunks.push_back(std::move(hunk));
    return change;
}

// ---------------------------------------------------------------------------
// Union merge. Both inputs are decomposed into per-side line facts
// (line number -> content, changed?) plus kept (old <-> new) alignment pairs
// from context lines. Facts are unioned with "changed" dominating "kept", so
// the merged changed-line sets are exactly the per-side set unions. Hunks are
// then rebuilt from the union; regions fuse only where every line in between
// is known, so the result can always be rendered without inventing content.
// ---------------------------------------------------------------------------

namespace {

struct LineFact {
    std::string text;
    bool changed = false;
    long anchor = 0;  // added new lines: claimed old line the insert follows
};

struct KeptPair {
    long old_line = 0;
    long new_line = 0;
    bool operator==(const KeptPair&) const = default;
};

struct Facts {
    std::map<long, LineFact> old_map;
    std::map<long, LineFact> new_map;
    std::vector<KeptPair> kept;
};

void add_fact(std::map<long, LineFact>& side, long number, const std::string& text, bool changed,
              long anchor, const char* side_name) {
    auto it = side.find(number);
    if (it == side.end()) {
        side.emplace(number, LineFact{text, changed, anchor});
        return;
    }
    if (it->second.text != text)
        throw BaseConflict(std::string(side_name) + " line " + std::to_string(number) +
                           ": conflicting content \"" + it->second.text + "\" vs \"" + text +
                           "\"");
    it->second.changed = it->second.changed || changed;
    it->second.anchor = std::max(it->second.anchor, anchor);
}

void extract_facts(const CodeChange& change, Facts& facts) {
    for (const Hunk& hunk : change.hunks) {
        long old_pos = hunk.old_start;
        long new_pos = hunk.new_start;
        for (const HunkLine& line : hunk.lines) {
            switch (line.marker) {
            case LineMarker::Context:
                add_fact(facts.old_map, old_pos, line.text, false, 0, "old");
                add_fact(facts.new_map, new_pos, line.text, false, 0, "new");
                facts.kept.push_back({old_pos, new_pos});
                ++old_pos;
                ++new_pos;
                break;
            case LineMarker::Removed:
                add_fact(facts.old_map, old_pos, line.text, true, 0, "old");
                ++old_pos;
                break;
            case LineMarker::Added:
                // zero-old-length hunks anchor on old_start itself; others on
                // the old line just before the walk cursor
                add_fact(facts.new_map, new_pos, line.text, true,
                         hunk.old_len > 0 ? old_pos - 1 : hunk.old_start, "new");
                ++new_pos;
                break;
            }
        }
    }
}

// drops pairs whose line became changed on either side, then requires a
// strictly monotone, unambiguous alignment
std::vector<KeptPair> settle_kept(const Facts& facts) {
    std::vector<KeptPair> kept;
    for (const KeptPair& pair : facts.kept) {
        if (facts.old_map.at(pair.old_line).changed)
            continue;
        if (facts.new_map.at(pair.new_line).changed)
            continue;
        kept.push_back(pair);
    }
    std::sort(kept.begin(), kept.end(), [](const KeptPair& a, const KeptPair& b) {
        return a.old_line != b.old_line ? a.old_line < b.old_line : a.new_line < b.new_line;
    });
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    for (std::size_t i = 1; i < kept.size(); ++i) {
        if (kept[i - 1].old_line == kept[i].old_line || kept[i - 1].new_line == kept[i].new_line)
            throw BaseConflict("ambiguous alignment: line mapped to two positions");
        if (kept[i - 1].new_line > kept[i].new_line)
            throw BaseConflict("crossing alignment between inputs");
    }
    return kept;
}

enum class RowKind { Kept, Removed, Added };

struct Row {
    RowKind kind;
    long old_line = 0;   // Kept / Removed
    long new_line = 0;   // Kept / Added
    long old_anchor = 0; // Added: old line the enclosing bucket starts after
    const std::string* text = nullptr;
};

// interleave: kept pairs are the skeleton; between two pairs, changed rows
// order by their old-file position (removals at their line, additions just
// past their claimed anchor), so unrelated edits caught in one wide bucket
// stay apart
std::vector<Row> build_rows(const Facts& facts, const std::vector<KeptPair>& kept) {
    std::vector<std::pair<long, const std::string*>> removals;
    for (const auto& [number, fact] : facts.old_map)
        if (fact.changed)
            removals.emplace_back(number, &fact.text);
    std::vector<std::pair<long, const std::string*>> additions;
    for (const auto& [number, fact] : facts.new_map)
        if (fact.changed)
            additions.emplace_back(number, &fact.text);

    std::vector<Row> rows;
    rows.reserve(removals.size() + additions.size() + kept.size());
    std::size_t r = 0;
    std::size_t a = 0;
    std::vector<Row> bucket;
    for (std::size_t k = 0; k <= kept.size(); ++k) {
        const long old_hi = k < kept.size() ? kept[k].old_line : LONG_MAX;
        const long new_hi = k < kept.size() ? kept[k].new_line : LONG_MAX;
        bucket.clear();
        const std::size_t r_end = [&] {
            std::size_t j = r;
            while (j < removals.size() && removals[j].first < old_hi)
                ++j;
            return j;
        }();
        const std::size_t a_end = [&] {
            std::size_t j = a;
            while (j < additions.size() && additions[j].first < new_hi)
                ++j;
            return j;
        }();
        // additions keep new-line order (those positions are the hard facts);
        // a removal slots in front of an addition whose anchor is at or past it
        while (r < r_end || a < a_end) {
            const bool take_removal =
                r < r_end &&
                (a >= a_end ||
                 removals[r].first <= facts.new_map.at(additions[a].first).anchor);
            if (take_removal) {
                bucket.push_back({RowKind::Removed, removals[r].first, 0, 0, removals[r].second});
                ++r;
            } else {
                const LineFact& fact = facts.new_map.at(additions[a].first);
                bucket.push_back({RowKind::Added, 0, additions[a].first, fact.anchor,
                                  additions[a].second});
                ++a;
            }
        }
        rows.insert(rows.end(), bucket.begin(), bucket.end());
        if (k < kept.size()) {
            const KeptPair& pair = kept[k];
            rows.push_back({RowKind::Kept, pair.old_line, pair.new_line, 0,
                            &facts.old_map.at(pair.old_line).text});
        }
    }
    return rows;
}

// runs of rows with contiguous positions on both sides
std::vector<std::vector<Row>> split_segments(const std::vector<Row>& rows) {
    std::vector<std::vector<Row>> segments;
    bool have_old = false;
    bool have_new = false;
    long next_old = 0;
    long next_new = 0;
    for (const Row& row : rows) {
        bool fits = true;
        switch (row.kind) {
        case RowKind::Kept:
            fits = (!have_old || row.old_line == next_old) && (!have_new || row.new_line == next_new);
            break;
        case RowKind::Removed:
            fits = !have_old || row.old_line == next_old;
            break;
        case RowKind::Added:
            fits = !have_new || row.new_line == next_new;
            break;
        }
        if (segments.empty() || !fits) {
            segments.emplace_back();
            have_old = have_new = false;
        }
        segments.back().push_back(row);
        if (row.kind != RowKind::Added) {
            next_old = row.old_line + 1;
            have_old = true;
        }
        if (row.kind != RowKind::Removed) {
            next_new = row.new_line + 1;
            have_new = true;
        }
    }
    return segments;
}

Hunk emit_hunk(const std::vector<Row>& rows, std::size_t begin, std::size_t end) {
    Hunk hunk;
    bool old_seen = false;
    bool new_seen = false;
    for (std::size_t i = begin; i < end; ++i) {
        const Row& row = rows[i];
        if (!old_seen && row.kind != RowKind::Added) {
            hunk.old_start = row.old_line;
            old_seen = true;
        }
        if (!new_seen && row.kind != RowKind::Removed) {
            hunk.new_start = row.new_line;
            new_seen = true;
        }
        if (row.kind != RowKind::Added)
            ++hunk.old_len;
        if (row.kind != RowKind::Removed)
            ++hunk.new_len;
        LineMarker marker = row.kind == RowKind::Kept     ? LineMarker::Context
                            : row.kind == RowKind::Removed ? LineMarker::Removed
                                                           : LineMarker::Added;
        hunk.lines.push_back({marker, *row.text});
    }
    // pure insertions keep their claimed anchor; pure removals hang off the
    // previous new line (identity shift when nothing better is known)
    if (!old_seen)
        hunk.old_start = rows[begin].old_anchor;
    if (!new_seen)
        hunk.new_start = std::max(0L, hunk.old_start - 1);
    return hunk;
}

void append_segment_hunks(const std::vector<Row>& segment, const MergeOptions& opts,
                          std::vector<Hunk>& out) {
    std::vector<std::size_t> changed;
    for (std::size_t i = 0; i < segment.size(); ++i)
        if (segment[i].kind != RowKind::Kept)
            changed.push_back(i);
    if (changed.empty())
        return;

    const std::size_t context = static_cast<std::size_t>(std::max(0L, opts.context));
    const std::size_t fusion_gap = static_cast<std::size_t>(std::max(0L, opts.fusion_gap));

    struct Cluster {
        std::size_t first;
        std::size_t last;
    };
    std::vector<Cluster> clusters{{changed[0], changed[0]}};
    for (std::size_t c = 1; c < changed.size(); ++c) {
        if (changed[c] - clusters.back().last - 1 > fusion_gap)
            clusters.push_back({changed[c], changed[c]});
        else
            clusters.back().last = changed[c];
    }

    // gap rows between split clusters are shared: up to `context` as the left
    // cluster's trailing context, up to `context` as the right one's lead
    for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
        const Cluster& cluster = clusters[ci];
        std::size_t avail_before = cluster.first;
        if (ci > 0) {
            const std::size_t gap = cluster.first - clusters[ci - 1].last - 1;
            avail_before = gap - std::min(context, gap);
        }
        std::size_t avail_after = segment.size() - 1 - cluster.last;
        if (ci + 1 < clusters.size())
            avail_after = clusters[ci + 1].first - cluster.last - 1;
        const std::size_t lead = std::min(context, avail_before);
        const std::size_t tail = std::min(context, avail_after);
        out.push_back(emit_hunk(segment, cluster.first - lead, cluster.last + tail + 1));
    }
}

CodeChange rebuild(const std::string& path, const Facts& facts, const MergeOptions& opts) {
    const std::vector<KeptPair> kept = settle_kept(facts);
    const std::vector<Row> rows = build_rows(facts, kept);

    CodeChange change;
    change.file_path = path;
    for (const auto& segment : split_segments(rows))
        append_segment_hunks(segment, opts, change.hunks);

    std::stable_sort(change.hunks.begin(), change.hunks.end(),
                     [](const Hunk& x, const Hunk& y) {
                         if (x.old_start != y.old_start)
                             return x.old_start < y.old_start;
                         return x.new_start < y.new_start;
                     });
    for (std::size_t k = 1; k < change.hunks.size(); ++k) {
        if (!hunks_ordered(change.hunks[k - 1], change.hunks[k]))
            throw BaseConflict("inputs do not admit a consistent hunk ordering");
    }
    return change;
}

} // namespace

CodeChange merge_union_diff(const CodeChange& a, const CodeChange& b, const MergeOptions& opts) {
    if (a.file_path != b.file_path)
        throw FileMismatch("different file paths: " + a.file_path + " vs " + b.file_path);
    Facts facts;
    extract_facts(a, facts);
    extract_facts(b, facts);
    return rebuild(a.file_path, facts, opts);
}

CodeChange canonicalize(const CodeChange& change, const MergeOptions& opts) {
    Facts facts;
    extract_facts(change, facts);
    return rebuild(change.file_path, facts, opts);
}

} // namespace revmix
