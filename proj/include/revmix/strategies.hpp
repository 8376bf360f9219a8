#pragma once

#include "revmix/analyzer.hpp"
#include "revmix/errors.hpp"
#include "revmix/gateway.hpp"
#include "revmix/review.hpp"

#include <map>
#include <string>
#include <vector>

namespace revmix {

/// The five review variants produced for one code change.
struct StrategyBundle {
    std::string sample_id;
    CodeChange change;
    std::map<StrategyKind, std::string> reviews;
    std::map<StrategyKind, std::string> provenance;  // endpoint / analyzer per kind

    bool complete() const { return reviews.size() == kAllStrategies.size(); }
};

class BundleIncomplete : public Error {
public:
    BundleIncomplete(std::string message, std::vector<StrategyKind> missing_kinds)
        : Error(std::move(message)), missing(std::move(missing_kinds)) {}
    std::vector<StrategyKind> missing;
};

/// Analyzer output formatted one finding per line:
/// "[rule] message (lines s..e)". No findings -> "No analyzer findings."
std::string run_kbs(const std::vector<Finding>& findings);

/// One completion of the base generation template.
std::string run_lbs(Gateway& gateway, const ModelEndpoint& endpoint, const CodeChange& change,
                    std::uint64_t seed);

/// One completion of the findings-augmented prompt.
std::string run_rag(Gateway& gateway, const ModelEndpoint& endpoint, const CodeChange& change,
                    const std::vector<Finding>& findings, std::uint64_t seed);

/// Literal concatenation, generator text first: lbs + "\n---\n" + kbs.
std::string run_nco(const std::string& lbs_review, const std::string& kbs_review);

struct BundleEndpoints {
    ModelEndpoint lbs;
    ModelEndpoint dat;  // the externally fine-tuned generator
    bool dat_is_alias = false;  // dat falls back to the lbs endpoint
};

/// All five reviews for one change; throws BundleIncomplete listing the kinds
/// that failed (bundles are all-or-nothing for evaluation).
StrategyBundle generate_bundle(Gateway& gateway, const std::string& sample_id,
                               const CodeChange& change, const std::vector<Finding>& findings,
                               const BundleEndpoints& endpoints, std::uint64_t seed);

std::string bundle_to_json(const StrategyBundle& bundle);
StrategyBundle bundle_from_json(const std::string& text);

} // namespace revmix
