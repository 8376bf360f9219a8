#pragma once

#include "revmix/diff.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace revmix {

enum class ReviewSource { Kbs, Lbs };

enum class AccuracyClass { Accurate, PartiallyAccurate, NotAccurate };

enum class StrategyKind { Kbs, Lbs, Dat, Rag, Nco };

inline constexpr std::array<StrategyKind, 5> kAllStrategies = {
    StrategyKind::Kbs, StrategyKind::Lbs, StrategyKind::Dat, StrategyKind::Rag,
    StrategyKind::Nco};

const char* to_string(ReviewSource source);
const char* to_string(AccuracyClass accuracy);
const char* to_string(StrategyKind kind);

ReviewSource review_source_from_string(std::string_view text);
AccuracyClass accuracy_from_string(std::string_view text);
StrategyKind strategy_from_string(std::string_view text);

/// Judge score on a 10-point scale.
struct Rating {
    int value = 0;  // 1..10
    std::string raw_response;
    bool operator==(const Rating&) const = default;
};

/// One review of one change: the (file, change, review, source) tuple the
/// dataset pipeline moves around, plus rule metadata for analyzer reviews.
struct ReviewRecord {
    std::string sample_id;
    std::string file_path;
    CodeChange change;
    std::string review;
    ReviewSource source = ReviewSource::Lbs;
    std::optional<std::string> rule_id;  // present iff source == Kbs
    std::optional<Rating> rating;

    bool operator==(const ReviewRecord&) const = default;
};

} // namespace revmix
