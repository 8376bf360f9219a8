#include "revmix/review.hpp"

#include "revmix/errors.hpp"
#include "revmix/util.hpp"

namespace revmix {

const char* to_string(ReviewSource source) {
    return source == ReviewSource::Kbs ? "KBS" : "LBS";
}

const char* to_string(AccuracyClass accuracy) {
    switch (accuracy) {
    case AccuracyClass::Accurate: return "accurate";
    case AccuracyClass::PartiallyAccurate: return "partially_accurate";
    case AccuracyClass::NotAccurate: return "not_accurate";
    }
    return "not_accurate";
}

const char* to_string(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::Kbs: return "kbs";
    case StrategyKind::Lbs: return "lbs";
    case StrategyKind::Dat: return "dat";
    case StrategyKind::Rag: return "rag";
    case StrategyKind::Nco: return "nco";
    }
    return "lbs";
}

ReviewSource review_source_from_string(std::string_view text) {
    const std::string lower = to_lower(text);
    if (lower == "kbs")
        return ReviewSource::Kbs;
    if (lower == "lbs")
        return ReviewSource::Lbs;
    throw InvalidInput("unknown review source: " + std::string(text));
}

AccuracyClass accuracy_from_string(std::string_view text) {
    const std::string lower = to_lower(text);
    if (lower == "accurate")
        return AccuracyClass::Accurate;
    if (lower == "partially_accurate" || lower == "partially accurate")
        return AccuracyClass::PartiallyAccurate;
    if (lower == "not_accurate" || lower == "not accurate")
        return AccuracyClass::NotAccurate;
    throw InvalidInput("unknown accuracy class: " + std::string(text));
}

StrategyKind strategy_from_string(std::string_view text) {
    const std::string lower = to_lower(text);
    for (StrategyKind kind : kAllStrategies)
        if (lower == to_string(kind))
            return kind;
    throw InvalidInput("unknown strategy kind: " + std::string(text));
}

} // namespace revmix
