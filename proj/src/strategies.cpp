#include "revmix/strategies.hpp"

#include "revmix/util.hpp"

#include <json.hpp>

namespace revmix {

using nlohmann::json;

std::string run_kbs(const std::vector<Finding>& findings) {
    if (findings.empty())
        return "No analyzer findings.";
    std::string out;
    for (const Finding& finding : findings) {
        if (!out.empty())
            out += '\n';
        out += "[" + finding.rule_id + "] " + finding.message + " (lines " +
               std::to_string(finding.span.start) + ".." + std::to_string(finding.span.end) +
               ")";
    }
    return out;
}

std::string run_lbs(Gateway& gateway, const ModelEndpoint& endpoint, const CodeChange& change,
                    std::uint64_t seed) {
    if (change.hunks.empty())
        throw InvalidInput("refusing to review an empty code change");
    return gateway.complete(endpoint, gateway.prompts().generation_prompt(change), seed);
}

std::string run_rag(Gateway& gateway, const ModelEndpoint& endpoint, const CodeChange& change,
                    const std::vector<Finding>& findings, std::uint64_t seed) {
    if (change.hunks.empty())
        throw InvalidInput("refusing to review an empty code change");
    return gateway.complete(endpoint, gateway.build_rag_prompt(change, findings), seed);
}

std::string run_nco(const std::string& lbs_review, const std::string& kbs_review) {
    if (trim(lbs_review).empty() || trim(kbs_review).empty())
        throw InvalidInput("concatenation needs both review texts");
    return lbs_review + "\n---\n" + kbs_review;
}

StrategyBundle generate_bundle(Gateway& gateway, const std::string& sample_id,
                               const CodeChange& change, const std::vector<Finding>& findings,
                               const BundleEndpoints& endpoints, std::uint64_t seed) {
    StrategyBundle bundle;
    bundle.sample_id = sample_id;
    bundle.change = change;

    std::vector<StrategyKind> missing;
    std::string failure;
    auto attempt = [&](StrategyKind kind, auto&& produce, std::string provenance) {
        try {
            bundle.reviews[kind] = produce();
            bundle.provenance[kind] = std::move(provenance);
        } catch (const Error& e) {
            missing.push_back(kind);
            failure = e.what();
        }
    };

    attempt(StrategyKind::Kbs, [&] { return run_kbs(findings); },
            findings.empty() ? "analyzer:none" : "analyzer:" +
                std::string(to_string(findings.front().analyzer)));
    attempt(StrategyKind::Lbs,
            [&] { return run_lbs(gateway, endpoints.lbs, change, derive_seed(seed, "lbs")); },
            "endpoint:" + endpoints.lbs.name);
    attempt(StrategyKind::Dat,
            [&] { return run_lbs(gateway, endpoints.dat, change, derive_seed(seed, "dat")); },
            "endpoint:" + endpoints.dat.name + (endpoints.dat_is_alias ? " (alias of lbs)" : ""));
    attempt(StrategyKind::Rag,
            [&] {
                return run_rag(gateway, endpoints.lbs, change, findings,
                               derive_seed(seed, "rag"));
            },
            "endpoint:" + endpoints.lbs.name);
    if (bundle.reviews.count(StrategyKind::Lbs) && bundle.reviews.count(StrategyKind::Kbs)) {
        attempt(StrategyKind::Nco,
                [&] {
                    return run_nco(bundle.reviews.at(StrategyKind::Lbs),
                                   bundle.reviews.at(StrategyKind::Kbs));
                },
                "concat:lbs+kbs");
    } else {
        missing.push_back(StrategyKind::Nco);
    }

    if (!missing.empty()) {
        std::string names;
        for (StrategyKind kind : missing) {
            if (!names.empty())
                names += ",";
            names += to_string(kind);
        }
        throw BundleIncomplete("bundle " + sample_id + " missing {" + names + "}" +
                                   (failure.empty() ? "" : ": " + failure),
                               std::move(missing));
    }
    return bundle;
}

std::string bundle_to_json(const StrategyBundle& bundle) {
    json reviews = json::object();
    json provenance = json::object();
    for (const auto& [kind, text] : bundle.reviews)
        reviews[to_string(kind)] = text;
    for (const auto& [kind, text] : bundle.provenance)
        provenance[to_string(kind)] = text;
    const json j = {
        {"sample_id", bundle.sample_id},
        {"diff", render_unified_diff(bundle.change)},
        {"reviews", reviews},
        {"provenance", provenance},
    };
    return j.dump();
}

StrategyBundle bundle_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("bad bundle JSON: ") + e.what());
    }
    StrategyBundle bundle;
    try {
        bundle.sample_id = j.at("sample_id").get<std::string>();
        bundle.change = parse_unified_diff(j.at("diff").get<std::string>());
        for (const auto& [key, value] : j.at("reviews").items())
            bundle.reviews[strategy_from_string(key)] = value.get<std::string>();
        if (j.contains("provenance"))
            for (const auto& [key, value] : j.at("provenance").items())
                bundle.provenance[strategy_from_string(key)] = value.get<std::string>();
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("bundle JSON missing fields: ") + e.what());
    }
    return bundle;
}

} // namespace revmix
