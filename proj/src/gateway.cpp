#include "revmix/gateway.hpp"

#include "revmix/errors.hpp"
#include "revmix/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

namespace revmix {

using nlohmann::json;

bool ModelEndpoint::is_mock() const { return base_url.rfind("mock://", 0) == 0; }

void ModelEndpoint::validate() const {
    if (name.empty())
        throw ConfigError("endpoint without a name");
    if (base_url.find("://") == std::string::npos)
        throw ConfigError("endpoint '" + name + "': base_url needs a scheme: " + base_url);
    if (temperature < 0.0)
        throw ConfigError("endpoint '" + name + "': negative temperature");
    if (max_tokens <= 0)
        throw ConfigError("endpoint '" + name + "': max_tokens must be positive");
    if (retry_limit < 0 || retry_limit > 5)
        throw ConfigError("endpoint '" + name + "': retry_limit must be within 0..5");
}

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

namespace {

// must stay in sync with the files under templates/ (checked by tests)
const char* kGenerateTemplate = R"TPL(<<<system>>>
You are an experienced Java code reviewer. You comment on unified diffs the way a careful human colleague would: concrete, specific to the change, and brief.
<<<user>>>
Write one review comment for the following code change. Point out the most important problems or improvements you see.

```diff
{{diff}}
```
)TPL";

const char* kRagTemplate = R"TPL(<<<system>>>
You are an experienced Java code reviewer. You comment on unified diffs the way a careful human colleague would: concrete, specific to the change, and brief.
<<<user>>>
Write one review comment for the following code change. Point out the most important problems or improvements you see.

```diff
{{diff}}
```

Static analysis findings for this change:
{{knowledge}}

Use the findings above where they are relevant, and add anything important they miss.
)TPL";

const char* kRateTemplate = R"TPL(<<<system>>>
You judge the quality of code review comments. You reply in the exact format requested, with no extra commentary.
<<<user>>>
Rate how relevant and useful the review comment below is for the given code, on a 10-point scale (1 = useless, 10 = excellent).

Code:
```
{{code}}
```

Review comment:
{{review}}

Reply with a single line of the form:
SCORE: <integer from 1 to 10>
)TPL";

const char* kClassifyTemplate = R"TPL(<<<system>>>
You judge the quality of code review comments. You reply in the exact format requested, with no extra commentary.
<<<user>>>
Decide how accurate the review comment below is for the given code change. Answer ACCURATE if it addresses real issues without errors or irrelevant statements, PARTIALLY_ACCURATE if only some parts are valid, and NOT_ACCURATE if it fails to address the real issues or is irrelevant to the context.

Code change:
```diff
{{diff}}
```

Review comment:
{{review}}

Reply with a single line of the form:
VERDICT: <ACCURATE | PARTIALLY_ACCURATE | NOT_ACCURATE>
)TPL";

const char* kRankTemplate = R"TPL(<<<system>>>
You judge the coverage of code review comments. You reply in the exact format requested, with no extra commentary.
<<<user>>>
Five review comments, labeled A to E, were written for the code change below. Rank them by coverage: how many distinct real issues in the change each one addresses. Rank 1 is the most comprehensive review, rank 5 the least. Use each rank exactly once.

Code change:
```diff
{{diff}}
```

{{candidates}}

Reply with five lines of the form:
RANK <label>: <integer from 1 to 5>
)TPL";

std::string replace_all(std::string text, std::string_view placeholder, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return text;
}

std::string diff_block(const CodeChange& change) {
    std::string text = render_unified_diff(change);
    if (!text.empty() && text.back() == '\n')
        text.pop_back();
    return text;
}

} // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    const std::pair<const char*, const char*> sources[] = {
        {"generate", kGenerateTemplate}, {"rag", kRagTemplate},   {"rate", kRateTemplate},
        {"classify", kClassifyTemplate}, {"rank", kRankTemplate},
    };
    for (const auto& [name, text] : sources) {
        Template tpl;
        tpl.id = std::string(name) + ".v1";
        const std::string body(text);
        const auto sys_marker = body.find("<<<system>>>");
        const auto user_marker = body.find("<<<user>>>");
        if (sys_marker == std::string::npos || user_marker == std::string::npos)
            throw ConfigError(std::string("template '") + name + "' lacks section markers");
        tpl.system = trim(body.substr(sys_marker + 12, user_marker - (sys_marker + 12)));
        tpl.user = trim(body.substr(user_marker + 10));
        lib.templates_.emplace(name, std::move(tpl));
    }
    return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& directory) {
    PromptLibrary lib;
    for (const char* name : {"generate", "rag", "rate", "classify", "rank"}) {
        const auto path = directory / (std::string(name) + ".txt");
        const std::string body = read_file(path);
        Template tpl;
        tpl.id = std::string(name) + ".v1";
        const auto sys_marker = body.find("<<<system>>>");
        const auto user_marker = body.find("<<<user>>>");
        if (sys_marker == std::string::npos || user_marker == std::string::npos)
            throw ConfigError("template file lacks section markers: " + path.string());
        tpl.system = trim(body.substr(sys_marker + 12, user_marker - (sys_marker + 12)));
        tpl.user = trim(body.substr(user_marker + 10));
        lib.templates_.emplace(name, std::move(tpl));
    }
    return lib;
}

const PromptLibrary::Template& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
        throw ConfigError("missing prompt template: " + name);
    return it->second;
}

Prompt PromptLibrary::generation_prompt(const CodeChange& change) const {
    const Template& tpl = get("generate");
    Prompt prompt;
    prompt.template_id = tpl.id;
    prompt.system = tpl.system;
    prompt.user = replace_all(tpl.user, "{{diff}}", diff_block(change));
    return prompt;
}

Prompt PromptLibrary::rag_prompt(const CodeChange& change,
                                 const std::vector<Finding>& findings) const {
    if (findings.empty())
        return generation_prompt(change);
    std::string knowledge;
    for (const Finding& finding : findings) {
        if (!knowledge.empty())
            knowledge += '\n';
        knowledge += "- [" + std::string(to_string(finding.analyzer)) + "/" + finding.rule_id +
                     " lines " + std::to_string(finding.span.start) + ".." +
                     std::to_string(finding.span.end) + "] " + finding.message;
    }
    const Template& tpl = get("rag");
    Prompt prompt;
    prompt.template_id = tpl.id;
    prompt.system = tpl.system;
    prompt.user = replace_all(tpl.user, "{{diff}}", diff_block(change));
    prompt.user = replace_all(std::move(prompt.user), "{{knowledge}}", knowledge);
    prompt.knowledge_block = knowledge;
    return prompt;
}

Prompt PromptLibrary::rating_prompt(const std::string& code_block,
                                    const std::string& review) const {
    const Template& tpl = get("rate");
    Prompt prompt;
    prompt.template_id = tpl.id;
    prompt.system = tpl.system;
    prompt.user = replace_all(tpl.user, "{{code}}", code_block);
    prompt.user = replace_all(std::move(prompt.user), "{{review}}", review);
    return prompt;
}

Prompt PromptLibrary::accuracy_prompt(const CodeChange& change, const std::string& review) const {
    const Template& tpl = get("classify");
    Prompt prompt;
    prompt.template_id = tpl.id;
    prompt.system = tpl.system;
    prompt.user = replace_all(tpl.user, "{{diff}}", diff_block(change));
    prompt.user = replace_all(std::move(prompt.user), "{{review}}", review);
    return prompt;
}

Prompt PromptLibrary::ranking_prompt(const CodeChange& change,
                                     const std::array<std::string, 5>& labeled_reviews) const {
    std::string candidates;
    for (std::size_t i = 0; i < labeled_reviews.size(); ++i) {
        if (!candidates.empty())
            candidates += "\n\n";
        candidates += "Review ";
        candidates += static_cast<char>('A' + i);
        candidates += ":\n";
        candidates += labeled_reviews[i];
    }
    const Template& tpl = get("rank");
    Prompt prompt;
    prompt.template_id = tpl.id;
    prompt.system = tpl.system;
    prompt.user = replace_all(tpl.user, "{{diff}}", diff_block(change));
    prompt.user = replace_all(std::move(prompt.user), "{{candidates}}", candidates);
    return prompt;
}

std::string PromptLibrary::version() const {
    std::uint64_t h = fnv1a("prompt-templates");
    for (const auto& [name, tpl] : templates_) {
        h = fnv1a(name, h);
        h = fnv1a(tpl.id, h);
        h = fnv1a(tpl.system, h);
        h = fnv1a(tpl.user, h);
    }
    return hex64(h);
}

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

namespace {

// wording screened against the strategy-name substrings so that anonymized
// presentations built from mock output stay blind
const char* kMockReviews[] = {
    "The new logic here should check for null before use; a missing guard could crash at "
    "runtime.",
    "Consider renaming the short identifier introduced in this hunk to something "
    "self-explanatory.",
    "This block repeats existing behaviour; reusing the shared helper would shrink the "
    "change.",
    "Error handling is missing around the modified section; an early return would be safer "
    "here.",
    "The boundary in the changed loop looks off by one; please re-check the final index.",
    "Magic numbers in the added lines should become named constants for readability.",
};

std::string template_family(const std::string& template_id) {
    const auto dot = template_id.find('.');
    return dot == std::string::npos ? template_id : template_id.substr(0, dot);
}

} // namespace

std::string MockLlmClient::complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                                    std::optional<std::uint64_t> seed) {
    std::uint64_t h = fnv1a(prompt.template_id);
    h = fnv1a(endpoint.model_id, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(prompt.system, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(prompt.user, h);
    h = fnv1a(seed ? hex64(*seed) : std::string("noseed"), h);

    const std::string family = template_family(prompt.template_id);
    if (family == "rate")
        return "SCORE: " + std::to_string(1 + static_cast<int>(h % 10));
    if (family == "classify") {
        static const char* verdicts[] = {"ACCURATE", "PARTIALLY_ACCURATE", "NOT_ACCURATE"};
        return std::string("VERDICT: ") + verdicts[h % 3];
    }
    if (family == "rank") {
        std::vector<int> ranks = {1, 2, 3, 4, 5};
        Rng rng(h);
        rng.shuffle(ranks);
        std::string out;
        for (int i = 0; i < 5; ++i) {
            out += "RANK ";
            out += static_cast<char>('A' + i);
            out += ": " + std::to_string(ranks[static_cast<std::size_t>(i)]) + "\n";
        }
        return out;
    }
    const std::string base = kMockReviews[h % (sizeof(kMockReviews) / sizeof(*kMockReviews))];
    return base + " (ref " + hex64(fnv1a("mock-review", h)).substr(0, 12) + ")";
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

std::string HttpLlmClient::complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                                    std::optional<std::uint64_t> seed) {
    const auto scheme_end = endpoint.base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base_url without scheme: " + endpoint.base_url);
    const auto path_start = endpoint.base_url.find('/', scheme_end + 3);
    const std::string origin =
        path_start == std::string::npos ? endpoint.base_url : endpoint.base_url.substr(0, path_start);
    std::string path =
        path_start == std::string::npos ? std::string() : endpoint.base_url.substr(path_start);
    if (path.empty() || path == "/")
        path = "/v1/chat/completions";

    json body = {
        {"model", endpoint.model_id},
        {"messages",
         {{{"role", "system"}, {"content", prompt.system}},
          {{"role", "user"}, {"content", prompt.user}}}},
        {"temperature", endpoint.temperature},
        {"max_tokens", endpoint.max_tokens},
    };
    if (seed)
        body["seed"] = *seed;

    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
        const char* key = std::getenv(endpoint.api_key_env.c_str());
        if (key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const int attempts = std::max(1, endpoint.retry_limit + 1);
    std::string last_error;
    bool timed_out = false;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto backoff = std::chrono::milliseconds(
                static_cast<long>(endpoint.backoff_base_ms) * (1L << (attempt - 1)));
            std::this_thread::sleep_for(backoff);
        }
        httplib::Client client(origin);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
        const auto micros =
            std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - seconds);
        client.set_connection_timeout(static_cast<time_t>(seconds.count()),
                                      static_cast<time_t>(micros.count()));
        client.set_read_timeout(static_cast<time_t>(seconds.count()),
                                static_cast<time_t>(micros.count()));

        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            timed_out = res.error() == httplib::Error::ConnectionTimeout;
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            timed_out = false;
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            const json reply = json::parse(res->body);
            const std::string content =
                reply.at("choices").at(0).at("message").at("content").get<std::string>();
            if (trim(content).empty())
                throw EmptyResponse("endpoint '" + endpoint.name + "' returned empty content");
            return content;
        } catch (const json::exception& e) {
            timed_out = false;
            last_error = std::string("unparseable response body: ") + e.what();
            continue;
        }
    }
    const std::string detail = "endpoint '" + endpoint.name + "' failed after " +
                               std::to_string(attempts) + " attempts: " + last_error;
    if (timed_out)
        throw TimeoutError(detail);
    throw TransportError(detail);
}

// ---------------------------------------------------------------------------
// Structured-output grammars
// ---------------------------------------------------------------------------

namespace {

std::optional<int> parse_int_strict(std::string_view text) {
    if (text.empty())
        return std::nullopt;
    long value = 0;
    for (char c : text) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return std::nullopt;
        value = value * 10 + (c - '0');
        if (value > 1000000)
            return std::nullopt;
    }
    return static_cast<int>(value);
}

} // namespace

int parse_score_line(const std::string& response) {
    for (const std::string& raw : split_lines(response)) {
        const std::string line = trim(raw);
        if (line.rfind("SCORE:", 0) != 0)
            continue;
        const auto value = parse_int_strict(trim(line.substr(6)));
        if (!value)
            throw UnparseableJudgment("bad SCORE line: " + line);
        if (*value < 1 || *value > 10)
            throw UnparseableJudgment("score out of the 1..10 scale: " + line);
        return *value;
    }
    throw UnparseableJudgment("no SCORE line in judge response");
}

AccuracyClass parse_verdict_line(const std::string& response) {
    for (const std::string& raw : split_lines(response)) {
        const std::string line = trim(raw);
        if (line.rfind("VERDICT:", 0) != 0)
            continue;
        const std::string token = to_lower(trim(line.substr(8)));
        if (token == "accurate")
            return AccuracyClass::Accurate;
        if (token == "partially_accurate")
            return AccuracyClass::PartiallyAccurate;
        if (token == "not_accurate")
            return AccuracyClass::NotAccurate;
        throw UnparseableJudgment("unknown verdict token: " + line);
    }
    throw UnparseableJudgment("no VERDICT line in judge response");
}

std::map<char, int> parse_rank_lines(const std::string& response) {
    std::map<char, int> ranks;
    for (const std::string& raw : split_lines(response)) {
        const std::string line = trim(raw);
        if (line.rfind("RANK", 0) != 0)
            continue;
        std::string rest = trim(line.substr(4));
        if (rest.size() < 3 || rest[0] < 'A' || rest[0] > 'E' || rest[1] != ':')
            throw UnparseableJudgment("bad RANK line: " + line);
        const char label = rest[0];
        const auto value = parse_int_strict(trim(rest.substr(2)));
        if (!value)
            throw UnparseableJudgment("bad RANK line: " + line);
        if (ranks.count(label))
            throw UnparseableJudgment("label ranked twice: " + line);
        ranks[label] = *value;
    }
    if (ranks.size() != 5)
        throw UnparseableJudgment("expected ranks for labels A..E, got " +
                                  std::to_string(ranks.size()));
    std::set<int> seen;
    for (const auto& [label, rank] : ranks)
        seen.insert(rank);
    if (seen != std::set<int>{1, 2, 3, 4, 5})
        throw NonPermutation("ranks are not a permutation of 1..5");
    return ranks;
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

struct Gateway::Throttles {
    struct Gate {
        std::mutex mutex;
        std::condition_variable cv;
        int active = 0;
    };
    std::mutex registry_mutex;
    std::map<std::string, std::unique_ptr<Gate>> gates;

    Gate& gate_for(const std::string& endpoint_name) {
        std::lock_guard lock(registry_mutex);
        auto& slot = gates[endpoint_name];
        if (!slot)
            slot = std::make_unique<Gate>();
        return *slot;
    }
};

namespace {

class GateGuard {
public:
    GateGuard(Gateway::Throttles::Gate& gate, int limit) : gate_(gate) {
        std::unique_lock lock(gate_.mutex);
        gate_.cv.wait(lock, [&] { return gate_.active < limit; });
        ++gate_.active;
    }
    ~GateGuard() {
        {
            std::lock_guard lock(gate_.mutex);
            --gate_.active;
        }
        gate_.cv.notify_one();
    }

private:
    Gateway::Throttles::Gate& gate_;
};

} // namespace

Gateway::Gateway(PromptLibrary prompts, int max_in_flight,
                 std::unique_ptr<LlmClient> override_client)
    : prompts_(std::move(prompts)),
      max_in_flight_(max_in_flight < 1 ? 1 : max_in_flight),
      override_client_(std::move(override_client)),
      mock_(std::make_unique<MockLlmClient>()),
      http_(std::make_unique<HttpLlmClient>()),
      throttles_(std::make_unique<Throttles>()) {}

Gateway::~Gateway() = default;

std::string Gateway::complete(const ModelEndpoint& endpoint, const Prompt& prompt,
                              std::optional<std::uint64_t> seed) {
    endpoint.validate();
    const std::string response = complete_throttled(endpoint, prompt, seed);
    if (trim(response).empty())
        throw EmptyResponse("endpoint '" + endpoint.name + "' returned an empty response");
    return response;
}

std::string Gateway::complete_throttled(const ModelEndpoint& endpoint, const Prompt& prompt,
                                        std::optional<std::uint64_t> seed) {
    GateGuard guard(throttles_->gate_for(endpoint.name), max_in_flight_);
    LlmClient* client = override_client_ ? override_client_.get()
                        : endpoint.is_mock() ? static_cast<LlmClient*>(mock_.get())
                                             : static_cast<LlmClient*>(http_.get());
    return client->complete(endpoint, prompt, seed);
}

GeneratedReviews Gateway::generate_reviews(const ModelEndpoint& endpoint,
                                           const CodeChange& change, int n,
                                           const std::string& sample_prefix,
                                           std::uint64_t seed) {
    if (n < 1)
        throw InvalidInput("generate_reviews needs n >= 1");
    const Prompt prompt = prompts_.generation_prompt(change);

    GeneratedReviews out;
    std::set<std::string> seen;
    std::exception_ptr last_error;
    for (int i = 0; i < n; ++i) {
        const std::uint64_t candidate_seed =
            derive_seed(seed, "generate", sample_prefix + "#" + std::to_string(i));
        std::string text;
        try {
            text = complete(endpoint, prompt, candidate_seed);
        } catch (const Error&) {
            last_error = std::current_exception();
            continue;  // candidate dropped
        }
        if (!seen.insert(text).second) {
            out.dedup_applied = true;
            continue;
        }
        ReviewRecord record;
        record.sample_id = sample_prefix + "/lbs/" + std::to_string(i);
        record.file_path = change.file_path;
        record.change = change;
        record.review = text;
        record.source = ReviewSource::Lbs;
        out.records.push_back(std::move(record));
    }
    if (out.records.empty() && last_error)
        std::rethrow_exception(last_error);
    return out;
}

Rating Gateway::rate_review(const ModelEndpoint& judge, const CodeChange& code,
                            const std::string& review, std::uint64_t seed) {
    std::string block = render_unified_diff(code);
    if (!block.empty() && block.back() == '\n')
        block.pop_back();
    return rate_rendered(judge, block, review, seed);
}

Rating Gateway::rate_review(const ModelEndpoint& judge, const CodeSnippet& code,
                            const std::string& review, std::uint64_t seed) {
    std::string block;
    for (const std::string& line : code.text) {
        if (!block.empty())
            block += '\n';
        block += line;
    }
    return rate_rendered(judge, block, review, seed);
}

Rating Gateway::rate_rendered(const ModelEndpoint& judge, const std::string& code_block,
                              const std::string& review, std::uint64_t seed) {
    if (trim(review).empty())
        throw InvalidInput("cannot rate an empty review");
    const Prompt prompt = prompts_.rating_prompt(code_block, review);
    std::string response = complete(judge, prompt, seed);
    try {
        return {parse_score_line(response), response};
    } catch (const UnparseableJudgment&) {
        Prompt reminder = prompt;
        reminder.user +=
            "\n\nYour previous reply could not be parsed. Reply with exactly one line: "
            "SCORE: <integer from 1 to 10>";
        response = complete(judge, reminder, derive_seed(seed, "reprompt"));
        return {parse_score_line(response), response};
    }
}

AccuracyClass Gateway::classify_accuracy(const ModelEndpoint& judge, const CodeChange& change,
                                         const std::string& review, std::uint64_t seed) {
    if (trim(review).empty())
        throw InvalidInput("cannot classify an empty review");
    const Prompt prompt = prompts_.accuracy_prompt(change, review);
    std::string response = complete(judge, prompt, seed);
    try {
        return parse_verdict_line(response);
    } catch (const UnparseableJudgment&) {
        Prompt reminder = prompt;
        reminder.user +=
            "\n\nYour previous reply could not be parsed. Reply with exactly one line: "
            "VERDICT: <ACCURATE | PARTIALLY_ACCURATE | NOT_ACCURATE>";
        response = complete(judge, reminder, derive_seed(seed, "reprompt"));
        return parse_verdict_line(response);
    }
}

std::map<char, int> Gateway::rank_by_coverage(const ModelEndpoint& judge,
                                              const CodeChange& change,
                                              const std::array<std::string, 5>& labeled_reviews,
                                              std::uint64_t seed) {
    const Prompt prompt = prompts_.ranking_prompt(change, labeled_reviews);
    std::string response = complete(judge, prompt, seed);
    try {
        return parse_rank_lines(response);
    } catch (const Error&) {  // UnparseableJudgment or NonPermutation
        Prompt reminder = prompt;
        reminder.user +=
            "\n\nYour previous reply could not be used. Reply with exactly five lines "
            "RANK <label>: <integer 1..5>, using each rank exactly once.";
        response = complete(judge, reminder, derive_seed(seed, "reprompt"));
        return parse_rank_lines(response);
    }
}

Prompt Gateway::build_rag_prompt(const CodeChange& change,
                                 const std::vector<Finding>& findings) const {
    return prompts_.rag_prompt(change, findings);
}

} // namespace revmix
