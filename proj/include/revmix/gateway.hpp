#pragma once

#include "revmix/analyzer.hpp"
#include "revmix/diff.hpp"
#include "revmix/review.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace revmix {

enum class EndpointRole { Generator, Judge };

/// One reachable model. Scheme "mock://" selects the deterministic offline
/// backend; everything else goes over the chat-completion HTTP wire format.
/// retry_limit counts retries after the first attempt (total attempts =
/// retry_limit + 1).
struct ModelEndpoint {
    std::string name;
    std::string base_url;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 512;
    std::chrono::milliseconds timeout{30000};
    int retry_limit = 3;  // <= 5
    EndpointRole role = EndpointRole::Generator;
    std::string api_key_env;  // env var holding the API key; empty = none
    int backoff_base_ms = 100;

    bool is_mock() const;
    void validate() const;  // throws ConfigError
};

struct Prompt {
    std::string system;
    std::string user;
    std::string template_id;
    std::optional<std::string> knowledge_block;  // present iff RAG template

    bool operator==(const Prompt&) const = default;
};

/// The versioned prompt templates ("<<<system>>>" / "<<<user>>>" sections,
/// "{{placeholder}}" substitution). The built-in set matches the text files
/// shipped under templates/.
class PromptLibrary {
public:
    static PromptLibrary builtin();
    static PromptLibrary load(const std::filesystem::path& directory);

    Prompt generation_prompt(const CodeChange& change) const;
    /// Zero findings degenerate to the base generation prompt.
    Prompt rag_prompt(const CodeChange& change, const std::vector<Finding>& findings) const;
    Prompt rating_prompt(const std::string& code_block, const std::string& review) const;
    Prompt accuracy_prompt(const CodeChange& change, const std::string& review) const;
    Prompt ranking_prompt(const CodeChange& change,
                          const std::array<std::string, 5>& labeled_reviews) const;

    std::string version() const;  // digest over all template texts

    bool operator==(const PromptLibrary&) const = default;

private:
    struct Template {
        std::string id;
        std::string system;
        std::string user;
        bool operator==(const Template&) const = default;
    };
    const Template& get(const std::string& name) const;
    std::map<std::string, Template> templates_;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                                 std::optional<std::uint64_t> seed) = 0;
};

/// Offline backend: the reply is a pure function of (template id, rendered
/// prompt content, seed). Judge templates get well-formed structured output;
/// generation templates get short review texts drawn from a fixed phrase bank.
class MockLlmClient : public LlmClient {
public:
    std::string complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                         std::optional<std::uint64_t> seed) override;
};

/// POSTs the chat-completion JSON body {model, messages, temperature,
/// max_tokens, seed} and reads choices[0].message.content.
class HttpLlmClient : public LlmClient {
public:
    std::string complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                         std::optional<std::uint64_t> seed) override;
};

// structured-output grammars; throw UnparseableJudgment / NonPermutation
int parse_score_line(const std::string& response);
AccuracyClass parse_verdict_line(const std::string& response);
std::map<char, int> parse_rank_lines(const std::string& response);

struct GeneratedReviews {
    std::vector<ReviewRecord> records;
    bool dedup_applied = false;  // exact duplicates were dropped
};

/// Provider-agnostic access plus the judge/generation call protocols. At most
/// `max_in_flight` completions run concurrently per endpoint.
class Gateway {
public:
    explicit Gateway(PromptLibrary prompts = PromptLibrary::builtin(), int max_in_flight = 4,
                     std::unique_ptr<LlmClient> override_client = nullptr);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    const PromptLibrary& prompts() const { return prompts_; }
    int max_in_flight() const { return max_in_flight_; }

    std::string complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                         std::optional<std::uint64_t> seed = {});

    /// n independent sampled completions for the change, deduplicated; record
    /// ids are "<prefix>/lbs/<k>" with k the candidate index.
    GeneratedReviews generate_reviews(const ModelEndpoint& endpoint, const CodeChange& change,
                                      int n, const std::string& sample_prefix,
                                      std::uint64_t seed);

    Rating rate_review(const ModelEndpoint& judge, const CodeChange& code,
                       const std::string& review, std::uint64_t seed = 0);
    Rating rate_review(const ModelEndpoint& judge, const CodeSnippet& code,
                       const std::string& review, std::uint64_t seed = 0);
    AccuracyClass classify_accuracy(const ModelEndpoint& judge, const CodeChange& change,
                                    const std::string& review, std::uint64_t seed = 0);
    /// Labels A..E in input order; returns the label -> rank bijection.
    std::map<char, int> rank_by_coverage(const ModelEndpoint& judge, const CodeChange& change,
                                         const std::array<std::string, 5>& labeled_reviews,
                                         std::uint64_t seed = 0);

    Prompt build_rag_prompt(const CodeChange& change,
                            const std::vector<Finding>& findings) const;

private:
    Rating rate_rendered(const ModelEndpoint& judge, const std::string& code_block,
                         const std::string& review, std::uint64_t seed);
    std::string complete_throttled(const ModelEndpoint& endpoint, const Prompt& prompt,
                                   std::optional<std::uint64_t> seed);

    PromptLibrary prompts_;
    int max_in_flight_;
    std::unique_ptr<LlmClient> override_client_;
    std::unique_ptr<MockLlmClient> mock_;
    std::unique_ptr<HttpLlmClient> http_;
    struct Throttles;
    std::unique_ptr<Throttles> throttles_;
};

} // namespace revmix
