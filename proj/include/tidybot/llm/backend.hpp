#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tidybot/promptkit/prompts.hpp"

namespace tidybot::llm {

inline constexpr std::string_view kDefaultModel = "text-davinci-003";
inline constexpr std::string_view kDefaultApiKeyEnv = "LLM_API_KEY";

struct DecodingParams {
    double temperature = 0.0;
    int max_tokens = 256;
    std::vector<std::string> stop_sequences{"\n\n"};
    std::string model_id{kDefaultModel};

    /// Throws ConfigError on a negative temperature or non-positive max_tokens.
    void validate() const;
    friend bool operator==(const DecodingParams&, const DecodingParams&) = default;
};

enum class CompletionSource { Http, Replay, Cache };
std::string_view to_string(CompletionSource s) noexcept;

struct CompletionRecord {
    PromptText prompt;
    DecodingParams params;
    std::string completion;
    CompletionSource source = CompletionSource::Replay;
    std::chrono::milliseconds latency{0};
};

/// SHA-256 (lowercase hex) over the prompt bytes, model id, temperature,
/// max_tokens and the ordered stop sequences. Each field is length-prefixed,
/// and the temperature is written in shortest round-trip form, so keys are
/// stable across runs and platforms.
std::string cache_key(std::string_view prompt, const DecodingParams& params);

/// Lowercase hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view bytes);

/// Cuts `text` at the earliest occurrence of any stop sequence.
std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops);

/// Uniform completion interface. Implementations are safe to share across threads.
class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionRecord complete(const PromptText& prompt, const DecodingParams& params) = 0;
    /// Identifies the completion source in reports (e.g. replay file digest).
    [[nodiscard]] virtual std::string fingerprint() const = 0;
};

// --- replay / cache store -------------------------------------------------

/// One line of a `.jsonl` replay or cache file.
struct StoreRecord {
    std::string key;
    std::string model;
    std::string prompt;
    DecodingParams params;
    std::string completion;
};

std::string to_jsonl_line(const StoreRecord& r);
StoreRecord store_record_from_jsonl(std::string_view line);
StoreRecord make_store_record(const PromptText& prompt, const DecodingParams& params, std::string completion);

/// Immutable in-memory index over replay records. The first record for a key wins.
class ReplayStore {
public:
    ReplayStore() = default;
    explicit ReplayStore(std::vector<StoreRecord> records);
    /// Throws ConfigError when the file is unreadable, ParseError on a bad line.
    static ReplayStore load(const std::filesystem::path& path);

    [[nodiscard]] const StoreRecord* find(std::string_view key) const;
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] const std::vector<StoreRecord>& records() const noexcept { return records_; }
    /// SHA-256 over the concatenated canonical lines.
    [[nodiscard]] std::string content_hash() const;

private:
    std::vector<StoreRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::shared_ptr<const ReplayStore> store);
    CompletionRecord complete(const PromptText& prompt, const DecodingParams& params) override;
    [[nodiscard]] std::string fingerprint() const override;

private:
    std::shared_ptr<const ReplayStore> store_;
    std::string hash_;
};

// --- HTTP ----------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_delay{1000};
    double multiplier = 2.0;
};

struct HttpOptions {
    std::string endpoint_url;
    std::string api_key_env{kDefaultApiKeyEnv};
    RetryPolicy retry;
    std::chrono::seconds timeout{60};
    /// Replaceable for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Minimal completion POST: {"model","prompt","temperature","max_tokens","stop"}
/// -> {"choices":[{"text"}]}. Retries transport failures, 5xx and 429.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpOptions options);
    CompletionRecord complete(const PromptText& prompt, const DecodingParams& params) override;
    [[nodiscard]] std::string fingerprint() const override;
    /// Number of HTTP requests issued so far (including retries).
    [[nodiscard]] std::size_t requests_sent() const noexcept;

private:
    HttpOptions options_;
    std::string base_;  // scheme://host[:port]
    std::string path_;
    mutable std::mutex mu_;
    std::size_t requests_ = 0;
};

/// Write-through cache in front of another backend. Hits are served from an
/// in-memory index loaded from `<cache_dir>/completions.jsonl`; misses are
/// forwarded and appended to that file under a process-wide lock plus an
/// advisory file lock.
class CachingBackend final : public Backend {
public:
    CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path cache_dir);
    CompletionRecord complete(const PromptText& prompt, const DecodingParams& params) override;
    [[nodiscard]] std::string fingerprint() const override;
    [[nodiscard]] const std::filesystem::path& cache_file() const noexcept { return file_; }

private:
    std::shared_ptr<Backend> inner_;
    std::filesystem::path file_;
    std::mutex mu_;
    std::unordered_map<std::string, std::string> index_;
};

inline constexpr std::string_view kCacheFileName = "completions.jsonl";

// --- configuration -------------------------------------------------------

struct BackendConfig {
    enum class Mode { Http, Replay };
    Mode mode = Mode::Replay;
    std::optional<std::string> endpoint_url;
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> replay_path;
    std::string model_id{kDefaultModel};
    std::string api_key_env{kDefaultApiKeyEnv};

    /// Throws ConfigError when the mode's required field is missing.
    void validate() const;
    [[nodiscard]] DecodingParams decoding_params() const;
};

/// Reads a JSON config: {"mode":"http"|"replay","endpoint_url","cache_dir",
/// "replay_path","model_id","api_key_env"}. Relative paths resolve against the
/// config file's directory.
BackendConfig load_backend_config(const std::filesystem::path& path);

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

/// Summary of a replay/cache file for the `cache-info` command.
struct StoreInfo {
    std::size_t records = 0;
    std::size_t unique_keys = 0;
    std::vector<std::pair<std::string, std::size_t>> per_model;
    std::string content_hash;
};
StoreInfo inspect_store(const std::filesystem::path& path);

} // namespace tidybot::llm
