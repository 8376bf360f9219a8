#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace revmix {

// FNV-1a over bytes. Used for sub-seed derivation, mock responses and content
// digests; std::hash is not stable across standard libraries.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t value);

// Independent deterministic stream for one pipeline stage / one record.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::string_view key);

// mt19937_64 with hand-rolled bounded draws and shuffling. The engine itself
// is fully specified by the standard; <random> distributions are not, and the
// pipeline has to be byte-identical across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // uniform in [0, n), n >= 1; rejection sampling to avoid modulo bias
    std::uint64_t bounded(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// k distinct indices out of [0, n), uniform without replacement, ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng);

// Runs fn(i) for every i in [0, n) on at most `workers` threads. Callers index
// their own result slots, so aggregation order never depends on scheduling.
// The first exception (by index) is rethrown after all workers finish.
void parallel_for_indexed(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

std::vector<std::string> split_lines(std::string_view text);
std::string to_lower(std::string_view text);
std::string trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Analyzer exec mode: run a shell command, capture stdout, kill on deadline.
struct ExecResult {
    int exit_code = -1;
    std::string output;
    bool timed_out = false;
};
ExecResult run_command_capture(const std::string& shell_command, std::chrono::milliseconds timeout);

} // namespace revmix
