#include "revmix/gateway.hpp"
#include "revmix/errors.hpp"
#include "revmix/util.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace revmix;

namespace {

ModelEndpoint mock_endpoint(const std::string& name, EndpointRole role) {
    ModelEndpoint endpoint;
    endpoint.name = name;
    endpoint.base_url = "mock://" + name;
    endpoint.model_id = "mock-model";
    endpoint.temperature = role == EndpointRole::Judge ? 0.0 : 0.8;
    endpoint.role = role;
    return endpoint;
}

CodeChange small_change() {
    CodeChange change;
    change.file_path = "src/Thing.java";
    Hunk hunk;
    hunk.old_start = 5;
    hunk.old_len = 2;
    hunk.new_start = 5;
    hunk.new_len = 3;
    hunk.lines = {{LineMarker::Context, "int a;"},
                  {LineMarker::Added, "int b = a;"},
                  {LineMarker::Context, "return a;"}};
    change.hunks.push_back(hunk);
    return change;
}

Finding make_finding(const std::string& rule, const std::string& message, long line) {
    Finding finding;
    finding.analyzer = Analyzer::Pmd;
    finding.rule_id = rule;
    finding.category = RuleCategory::CodingStyle;
    finding.message = message;
    finding.file_path = "src/Thing.java";
    finding.span = {line, line};
    return finding;
}

class ScriptedClient : public LlmClient {
public:
    explicit ScriptedClient(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string complete(const ModelEndpoint&, const Prompt&,
                         std::optional<std::uint64_t>) override {
        if (next_ >= responses_.size())
            throw TransportError("script exhausted");
        return responses_[next_++];
    }

private:
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
};

Gateway scripted(std::vector<std::string> responses) {
    return Gateway(PromptLibrary::builtin(), 4,
                   std::make_unique<ScriptedClient>(std::move(responses)));
}

} // namespace

TEST_CASE("shipped template files match the built-in library") {
    CHECK(PromptLibrary::load(REVMIX_TEMPLATE_DIR) == PromptLibrary::builtin());
    CHECK(PromptLibrary::builtin().version() ==
          PromptLibrary::load(REVMIX_TEMPLATE_DIR).version());
}

TEST_CASE("mock backend is deterministic per (prompt, seed)") {
    Gateway gateway;
    ModelEndpoint endpoint = mock_endpoint("gen", EndpointRole::Generator);
    Prompt prompt = gateway.prompts().generation_prompt(small_change());

    CHECK(gateway.complete(endpoint, prompt, 7) == gateway.complete(endpoint, prompt, 7));
    CHECK(gateway.complete(endpoint, prompt, 7) != gateway.complete(endpoint, prompt, 8));
}

TEST_CASE("mock candidate texts are collision-free over a seed sweep") {
    Gateway gateway;
    ModelEndpoint endpoint = mock_endpoint("gen", EndpointRole::Generator);
    Prompt prompt = gateway.prompts().generation_prompt(small_change());
    std::set<std::string> texts;
    for (std::uint64_t seed = 0; seed < 200; ++seed)
        texts.insert(gateway.complete(endpoint, prompt, seed));
    CHECK(texts.size() == 200);
}

TEST_CASE("mock review wording never leaks strategy names") {
    Gateway gateway;
    ModelEndpoint endpoint = mock_endpoint("gen", EndpointRole::Generator);
    Prompt prompt = gateway.prompts().generation_prompt(small_change());
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const std::string lower = to_lower(gateway.complete(endpoint, prompt, seed));
        for (const char* banned : {"kbs", "lbs", "dat", "rag", "nco"})
            CHECK(lower.find(banned) == std::string::npos);
    }
}

TEST_CASE("unreachable endpoint surfaces TransportError after its retries") {
    Gateway gateway;
    ModelEndpoint endpoint;
    endpoint.name = "dead";
    endpoint.base_url = "http://127.0.0.1:9";
    endpoint.model_id = "m";
    endpoint.timeout = std::chrono::milliseconds(200);
    endpoint.retry_limit = 2;
    endpoint.backoff_base_ms = 1;
    Prompt prompt = gateway.prompts().generation_prompt(small_change());
    try {
        gateway.complete(endpoint, prompt, 1);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    }
}

TEST_CASE("endpoint validation") {
    ModelEndpoint endpoint = mock_endpoint("x", EndpointRole::Generator);
    endpoint.retry_limit = 9;
    CHECK_THROWS_AS(endpoint.validate(), ConfigError);
    endpoint.retry_limit = 3;
    endpoint.base_url = "no-scheme";
    CHECK_THROWS_AS(endpoint.validate(), ConfigError);
}

TEST_CASE("generate_reviews produces n deduplicated generator records") {
    Gateway gateway;
    ModelEndpoint endpoint = mock_endpoint("gen", EndpointRole::Generator);
    CodeChange change = small_change();

    GeneratedReviews four = gateway.generate_reviews(endpoint, change, 4, "s1", 99);
    CHECK(four.records.size() == 4);
    CHECK_FALSE(four.dedup_applied);
    for (const auto& record : four.records) {
        CHECK(record.source == ReviewSource::Lbs);
        CHECK_FALSE(record.rule_id.has_value());
        CHECK(record.file_path == change.file_path);
    }
    CHECK(four.records[0].sample_id == "s1/lbs/0");

    GeneratedReviews one = gateway.generate_reviews(endpoint, change, 1, "s2", 99);
    CHECK(one.records.size() == 1);

    CHECK_THROWS_AS(gateway.generate_reviews(endpoint, change, 0, "s3", 99), InvalidInput);
}

TEST_CASE("generate_reviews collapses duplicate completions and flags it") {
    Gateway gateway = scripted({"same text", "same text", "other text", "same text"});
    ModelEndpoint endpoint = mock_endpoint("gen", EndpointRole::Generator);
    GeneratedReviews out = gateway.generate_reviews(endpoint, small_change(), 4, "s", 1);
    CHECK(out.dedup_applied);
    REQUIRE(out.records.size() == 2);
    CHECK(out.records[0].review == "same text");
    CHECK(out.records[0].sample_id == "s/lbs/0");
    CHECK(out.records[1].review == "other text");
    CHECK(out.records[1].sample_id == "s/lbs/2");
}

TEST_CASE("rate_review parses SCORE lines and enforces the scale") {
    ModelEndpoint judge = mock_endpoint("judge", EndpointRole::Judge);

    Rating nine = scripted({"SCORE: 9"}).rate_review(judge, small_change(), "review", 1);
    CHECK(nine.value == 9);
    CHECK(nine.raw_response == "SCORE: 9");

    // parse failure, then a successful re-prompt
    Rating recovered =
        scripted({"great review", "SCORE: 7"}).rate_review(judge, small_change(), "review", 1);
    CHECK(recovered.value == 7);

    // both attempts unusable
    CHECK_THROWS_AS(
        scripted({"great review", "still chatty"}).rate_review(judge, small_change(), "r", 1),
        UnparseableJudgment);

    // out of scale counts as unparseable
    CHECK_THROWS_AS(
        scripted({"SCORE: 11", "SCORE: 0"}).rate_review(judge, small_change(), "r", 1),
        UnparseableJudgment);

    // the mock judge always yields a valid in-scale rating
    Gateway gateway;
    Rating mock_rating = gateway.rate_review(judge, small_change(), "some review", 5);
    CHECK(mock_rating.value >= 1);
    CHECK(mock_rating.value <= 10);
}

TEST_CASE("classify_accuracy maps verdict tokens") {
    ModelEndpoint judge = mock_endpoint("judge", EndpointRole::Judge);
    CHECK(scripted({"VERDICT: ACCURATE"}).classify_accuracy(judge, small_change(), "r", 1) ==
          AccuracyClass::Accurate);
    CHECK(scripted({"VERDICT: PARTIALLY_ACCURATE"})
              .classify_accuracy(judge, small_change(), "r", 1) ==
          AccuracyClass::PartiallyAccurate);
    CHECK(scripted({"VERDICT: NOT_ACCURATE"})
              .classify_accuracy(judge, small_change(), "r", 1) ==
          AccuracyClass::NotAccurate);
    CHECK_THROWS_AS(scripted({"free text", "more free text"})
                        .classify_accuracy(judge, small_change(), "r", 1),
                    UnparseableJudgment);
}

TEST_CASE("rank_by_coverage returns a bijection and rejects non-permutations") {
    ModelEndpoint judge = mock_endpoint("judge", EndpointRole::Judge);
    const std::array<std::string, 5> reviews = {"a", "b", "c", "d", "e"};

    auto identity = scripted({"RANK A: 1\nRANK B: 2\nRANK C: 3\nRANK D: 4\nRANK E: 5"})
                        .rank_by_coverage(judge, small_change(), reviews, 1);
    for (int i = 0; i < 5; ++i)
        CHECK(identity.at(static_cast<char>('A' + i)) == i + 1);

    // duplicate rank triggers one re-prompt, then NonPermutation
    const std::string dupes = "RANK A: 1\nRANK B: 1\nRANK C: 3\nRANK D: 4\nRANK E: 5";
    CHECK_THROWS_AS(
        scripted({dupes, dupes}).rank_by_coverage(judge, small_change(), reviews, 1),
        NonPermutation);

    // re-prompt can recover from a duplicate-rank reply
    auto recovered =
        scripted({dupes, "RANK A: 2\nRANK B: 1\nRANK C: 3\nRANK D: 4\nRANK E: 5"})
            .rank_by_coverage(judge, small_change(), reviews, 1);
    CHECK(recovered.at('A') == 2);

    // mock judge: stable permutation across reruns (seeded-shuffle oracle)
    Gateway gateway;
    auto first = gateway.rank_by_coverage(judge, small_change(), reviews, 42);
    auto second = gateway.rank_by_coverage(judge, small_change(), reviews, 42);
    CHECK(first == second);
    std::set<int> values;
    for (const auto& [label, rank] : first)
        values.insert(rank);
    CHECK(values == std::set<int>{1, 2, 3, 4, 5});
}

TEST_CASE("empty completion surfaces EmptyResponse") {
    ModelEndpoint judge = mock_endpoint("judge", EndpointRole::Judge);
    Gateway gateway = scripted({"   \n"});
    CHECK_THROWS_AS(
        gateway.complete(judge, gateway.prompts().generation_prompt(small_change()), 1),
        EmptyResponse);
}

TEST_CASE("RAG prompt embeds every finding verbatim exactly once, in order") {
    Gateway gateway;
    CodeChange change = small_change();
    std::vector<Finding> findings = {
        make_finding("ShortVariable", "Avoid using short variable names like `v`.", 6),
        make_finding("LocalVariableCouldBeFinal", "Local variable could be declared final.", 6),
    };
    Prompt prompt = gateway.build_rag_prompt(change, findings);
    CHECK(prompt.template_id == "rag.v1");
    REQUIRE(prompt.knowledge_block.has_value());

    int bullets = 0;
    for (const std::string& line : split_lines(*prompt.knowledge_block))
        if (line.rfind("- [", 0) == 0)
            ++bullets;
    CHECK(bullets == 2);

    for (const Finding& finding : findings) {
        std::size_t first = prompt.user.find(finding.message);
        REQUIRE(first != std::string::npos);
        CHECK(prompt.user.find(finding.message, first + 1) == std::string::npos);
    }
    CHECK(prompt.user.find(findings[0].message) < prompt.user.find(findings[1].message));
}

TEST_CASE("zero findings degrade the RAG prompt to the base template") {
    Gateway gateway;
    CodeChange change = small_change();
    Prompt rag = gateway.build_rag_prompt(change, {});
    Prompt base = gateway.prompts().generation_prompt(change);
    CHECK(rag == base);
    CHECK_FALSE(rag.knowledge_block.has_value());

    // identical prompts mean identical mock output
    ModelEndpoint endpoint = mock_endpoint("gen", EndpointRole::Generator);
    CHECK(gateway.complete(endpoint, rag, 3) == gateway.complete(endpoint, base, 3));
}
