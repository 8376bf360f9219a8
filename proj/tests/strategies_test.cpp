#include "revmix/strategies.hpp"
#include "revmix/errors.hpp"
#include "revmix/util.hpp"

#include <doctest.h>

using namespace revmix;

namespace {

ModelEndpoint mock_endpoint(const std::string& name) {
    ModelEndpoint endpoint;
    endpoint.name = name;
    endpoint.base_url = "mock://" + name;
    endpoint.model_id = name + "-model";
    endpoint.temperature = 0.8;
    return endpoint;
}

CodeChange constructor_change() {
    return parse_unified_diff(
        "--- a/GoogleAuthenticatorAccount.java\n"
        "+++ b/GoogleAuthenticatorAccount.java\n"
        "@@ -38,3 +38,5 @@\n"
        "         super(username, secretKey, validationCode, scratchCodes);\n"
        "+        long v =  java.lang.System.currentTimeMillis();\n"
        "+        this.setId(v);\n"
        "     }\n"
        " }\n");
}

Finding short_variable_finding() {
    Finding finding;
    finding.analyzer = Analyzer::Pmd;
    finding.rule_id = "ShortVariable";
    finding.category = RuleCategory::CodingStyle;
    finding.message = "Avoid using short variable names like `v`.";
    finding.file_path = "GoogleAuthenticatorAccount.java";
    finding.span = {39, 39};
    return finding;
}

BundleEndpoints mock_bundle_endpoints() {
    BundleEndpoints endpoints;
    endpoints.lbs = mock_endpoint("lbs-gen");
    endpoints.dat = mock_endpoint("dat-gen");
    return endpoints;
}

class FailOnRagClient : public LlmClient {
public:
    std::string complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                         std::optional<std::uint64_t> seed) override {
        if (prompt.template_id == "rag.v1")
            throw TransportError("rag backend down");
        return mock_.complete(endpoint, prompt, seed);
    }

private:
    MockLlmClient mock_;
};

} // namespace

TEST_CASE("run_kbs formats findings one per line") {
    Finding finding = short_variable_finding();
    std::string text = run_kbs({finding});
    CHECK(text.find("Avoid using short variable names like `v`.") != std::string::npos);
    CHECK(text.find("[ShortVariable]") != std::string::npos);
    CHECK(text.find("(lines 39..39)") != std::string::npos);

    CHECK(run_kbs({}) == "No analyzer findings.");

    Finding second = finding;
    second.rule_id = "LocalVariableCouldBeFinal";
    second.message = "Local variable could be declared final.";
    Finding third = finding;
    third.rule_id = "AtLeastOneConstructor";
    third.message = "Each class should declare at least one constructor.";
    std::string three = run_kbs({finding, second, third});
    auto lines = split_lines(three);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].find("ShortVariable") != std::string::npos);
    CHECK(lines[1].find("LocalVariableCouldBeFinal") != std::string::npos);
    CHECK(lines[2].find("AtLeastOneConstructor") != std::string::npos);
}

TEST_CASE("run_lbs completes the base template and rejects empty changes") {
    Gateway gateway;
    ModelEndpoint endpoint = mock_endpoint("gen");
    CodeChange change = constructor_change();

    std::string first = run_lbs(gateway, endpoint, change, 11);
    std::string second = run_lbs(gateway, endpoint, change, 11);
    CHECK(first == second);
    CHECK_FALSE(first.empty());

    CodeChange empty;
    empty.file_path = "src/Empty.java";
    CHECK_THROWS_AS(run_lbs(gateway, endpoint, empty, 11), InvalidInput);
}

TEST_CASE("run_rag degenerates to run_lbs when no findings exist") {
    Gateway gateway;
    ModelEndpoint endpoint = mock_endpoint("gen");
    CodeChange change = constructor_change();
    CHECK(run_rag(gateway, endpoint, change, {}, 21) == run_lbs(gateway, endpoint, change, 21));
    CHECK(run_rag(gateway, endpoint, change, {short_variable_finding()}, 21) ==
          run_rag(gateway, endpoint, change, {short_variable_finding()}, 21));
}

TEST_CASE("run_nco concatenates without rewriting") {
    CHECK(run_nco("A.", "B.") == "A.\n---\nB.");
    const std::string lbs =
        "The addition of the `id` field is unnecessary as the parent class "
        "`OneTimeTokenAccount` already has an `id` field.";
    const std::string kbs = "Avoid using short variable names like `v`.";
    const std::string nco = run_nco(lbs, kbs);
    CHECK(nco.find(lbs) == 0);
    CHECK(nco.find(kbs) != std::string::npos);
    CHECK(nco.size() == lbs.size() + 5 + kbs.size());

    CHECK_THROWS_AS(run_nco("", "B."), InvalidInput);
    CHECK_THROWS_AS(run_nco("A.", "  "), InvalidInput);
}

TEST_CASE("generate_bundle yields all five kinds with containment invariants") {
    Gateway gateway;
    CodeChange change = constructor_change();
    StrategyBundle bundle = generate_bundle(gateway, "sample-1", change,
                                            {short_variable_finding()},
                                            mock_bundle_endpoints(), 77);

    CHECK(bundle.complete());
    for (StrategyKind kind : kAllStrategies)
        CHECK(bundle.reviews.count(kind) == 1);

    const std::string& nco = bundle.reviews.at(StrategyKind::Nco);
    CHECK(nco.find(bundle.reviews.at(StrategyKind::Lbs)) != std::string::npos);
    CHECK(nco.find(bundle.reviews.at(StrategyKind::Kbs)) != std::string::npos);
}

TEST_CASE("a failing sub-call produces BundleIncomplete with the missing kinds") {
    Gateway gateway(PromptLibrary::builtin(), 4, std::make_unique<FailOnRagClient>());
    CodeChange change = constructor_change();
    try {
        generate_bundle(gateway, "sample-2", change, {short_variable_finding()},
                        mock_bundle_endpoints(), 78);
        FAIL("expected BundleIncomplete");
    } catch (const BundleIncomplete& e) {
        REQUIRE(e.missing.size() == 1);
        CHECK(e.missing[0] == StrategyKind::Rag);
    }
}

TEST_CASE("bundle JSON round-trips") {
    Gateway gateway;
    StrategyBundle bundle = generate_bundle(gateway, "sample-3", constructor_change(),
                                            {short_variable_finding()},
                                            mock_bundle_endpoints(), 79);
    StrategyBundle back = bundle_from_json(bundle_to_json(bundle));
    CHECK(back.sample_id == bundle.sample_id);
    CHECK(back.change == bundle.change);
    CHECK(back.reviews == bundle.reviews);
    CHECK(back.provenance == bundle.provenance);

    CHECK_THROWS_AS(bundle_from_json("not json"), InvalidInput);
    CHECK_THROWS_AS(bundle_from_json("{}"), InvalidInput);
}
