#pragma once

// Test-side oracles and generators. Everything here recomputes expectations
// from first principles, independent of the library code paths under test.

#include "revmix/diff.hpp"
#include "revmix/util.hpp"

#include <set>
#include <string>
#include <vector>

namespace testutil {

// Brute-force changed-line collector: walks hunk bodies with its own cursor
// arithmetic (does not share code with revmix::changed_line_spans).
inline std::set<long> walked_lines(const revmix::CodeChange& change, bool new_side) {
    std::set<long> out;
    for (const auto& hunk : change.hunks) {
        long old_pos = hunk.old_start;
        long new_pos = hunk.new_start;
        for (const auto& line : hunk.lines) {
            if (line.marker == revmix::LineMarker::Context) {
                ++old_pos;
                ++new_pos;
            } else if (line.marker == revmix::LineMarker::Removed) {
                if (!new_side)
                    out.insert(old_pos);
                ++old_pos;
            } else {
                if (new_side)
                    out.insert(new_pos);
                ++new_pos;
            }
        }
    }
    return out;
}

inline std::set<long> flatten_spans(const std::vector<revmix::LineSpan>& spans) {
    std::set<long> out;
    for (const auto& span : spans)
        for (long n = span.start; n <= span.end; ++n)
            out.insert(n);
    return out;
}

// One randomized mergeable pair: two partial views of the same global edit on
// the same base file (hunk windows carry globally consistent coordinates, the
// way hunks extracted from one multi-hunk diff do), optionally plus an
// addition-only snippet window over the new file.
struct MergeCase {
    revmix::CodeChange a;
    revmix::CodeChange b;
};

namespace detail {

struct GlobalRow {
    char kind;  // ' ', '-', '+'
    long old_pos;
    long new_pos;
    std::string text;
};

struct GlobalEdit {
    std::vector<GlobalRow> rows;
    std::vector<std::string> new_file;
    std::vector<long> new_anchor;  // per new line: old line it follows
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // changed-row runs
};

inline GlobalEdit make_global_edit(revmix::Rng& rng) {
    GlobalEdit edit;
    const long n = 30 + static_cast<long>(rng.bounded(50));
    long old_pos = 1;
    long new_pos = 1;
    auto push_insertions = [&] {
        if (rng.bounded(100) < 12) {
            const long count = 1 + static_cast<long>(rng.bounded(3));
            for (long k = 0; k < count; ++k) {
                std::string text = "ins " + revmix::hex64(rng.next()).substr(8);
                edit.rows.push_back({'+', old_pos, new_pos, text});
                edit.new_file.push_back(text);
                edit.new_anchor.push_back(old_pos - 1);
                ++new_pos;
            }
        }
    };
    for (long i = 1; i <= n; ++i) {
        push_insertions();
        std::string text = "line " + std::to_string(i) + " " + revmix::hex64(rng.next()).substr(12);
        if (rng.bounded(100) < 10) {
            edit.rows.push_back({'-', old_pos, new_pos, text});
            ++old_pos;
        } else {
            edit.rows.push_back({' ', old_pos, new_pos, text});
            edit.new_file.push_back(text);
            edit.new_anchor.push_back(old_pos - 1);
            ++old_pos;
            ++new_pos;
        }
    }
    push_insertions();

    for (std::size_t i = 0; i < edit.rows.size();) {
        if (edit.rows[i].kind == ' ') {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < edit.rows.size() && edit.rows[j + 1].kind != ' ')
            ++j;
        edit.groups.emplace_back(i, j);
        i = j + 1;
    }
    return edit;
}

inline revmix::Hunk hunk_from_rows(const std::vector<GlobalRow>& rows, std::size_t lo,
                                   std::size_t hi) {
    revmix::Hunk hunk;
    bool old_seen = false;
    bool new_seen = false;
    for (std::size_t i = lo; i <= hi; ++i) {
        const GlobalRow& row = rows[i];
        if (row.kind != '+') {
            if (!old_seen) {
                hunk.old_start = row.old_pos;
                old_seen = true;
            }
            ++hunk.old_len;
        }
        if (row.kind != '-') {
            if (!new_seen) {
                hunk.new_start = row.new_pos;
                new_seen = true;
            }
            ++hunk.new_len;
        }
        revmix::LineMarker marker = row.kind == ' '   ? revmix::LineMarker::Context
                                    : row.kind == '-' ? revmix::LineMarker::Removed
                                                      : revmix::LineMarker::Added;
        hunk.lines.push_back({marker, row.text});
    }
    if (!old_seen)
        hunk.old_start = rows[lo].old_pos - 1;
    if (!new_seen)
        hunk.new_start = rows[lo].new_pos - 1;
    return hunk;
}

// view = union of context windows around a subset of the changed-row groups
inline revmix::CodeChange make_view(const GlobalEdit& edit, revmix::Rng& rng,
                                    const std::string& path) {
    revmix::CodeChange view;
    view.file_path = path;
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    for (const auto& [first, last] : edit.groups) {
        if (rng.bounded(100) < 55) {
            const std::size_t ctx = rng.bounded(4);
            const std::size_t lo = first >= ctx ? first - ctx : 0;
            const std::size_t hi = std::min(last + ctx, edit.rows.size() - 1);
            windows.emplace_back(lo, hi);
        }
    }
    if (windows.empty() && !edit.groups.empty()) {
        const auto& [first, last] = edit.groups[rng.bounded(edit.groups.size())];
        windows.emplace_back(first, last);
    }
    // fuse overlapping/touching windows so hunks stay disjoint
    std::vector<std::pair<std::size_t, std::size_t>> fused;
    for (const auto& w : windows) {
        if (!fused.empty() && w.first <= fused.back().second + 1)
            fused.back().second = std::max(fused.back().second, w.second);
        else
            fused.push_back(w);
    }
    for (const auto& [lo, hi] : fused)
        view.hunks.push_back(hunk_from_rows(edit.rows, lo, hi));
    return view;
}

inline revmix::CodeChange make_pseudo_view(const GlobalEdit& edit, revmix::Rng& rng,
                                           const std::string& path) {
    revmix::CodeChange view;
    view.file_path = path;
    if (edit.new_file.empty())
        return view;
    const long total = static_cast<long>(edit.new_file.size());
    const long start = 1 + static_cast<long>(rng.bounded(static_cast<std::uint64_t>(total)));
    const long end = std::min(total, start + static_cast<long>(rng.bounded(8)));
    revmix::Hunk hunk;
    hunk.old_start = edit.new_anchor[static_cast<std::size_t>(start - 1)];
    hunk.old_len = 0;
    hunk.new_start = start;
    hunk.new_len = end - start + 1;
    for (long n = start; n <= end; ++n)
        hunk.lines.push_back({revmix::LineMarker::Added,
                              edit.new_file[static_cast<std::size_t>(n - 1)]});
    view.hunks.push_back(std::move(hunk));
    return view;
}

} // namespace detail

inline MergeCase random_merge_case(revmix::Rng& rng) {
    const std::string path = "src/Sample.java";
    for (;;) {
        detail::GlobalEdit edit = detail::make_global_edit(rng);
        if (edit.groups.empty())
            continue;
        MergeCase out;
        out.a = detail::make_view(edit, rng, path);
        out.b = rng.bounded(100) < 25 ? detail::make_pseudo_view(edit, rng, path)
                                      : detail::make_view(edit, rng, path);
        if (out.a.hunks.empty() || out.b.hunks.empty())
            continue;
        return out;
    }
}

} // namespace testutil
