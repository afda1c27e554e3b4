#include "tidybot/llm/backend.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <array>
#include <charconv>
#include <cstdlib>
#include <map>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "tidybot/core/dataset.hpp"

namespace tidybot::llm {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void DecodingParams::validate() const {
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

std::string_view to_string(CompletionSource s) noexcept {
    switch (s) {
    case CompletionSource::Http: return "http";
    case CompletionSource::Replay: return "replay";
    case CompletionSource::Cache: return "cache";
    }
    return "replay";
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace {

void put_field(std::string& buf, std::string_view field) {
    buf += std::to_string(field.size());
    buf += ':';
    buf += field;
    buf += ';';
}

std::string shortest(double v) {
    std::array<char, 64> tmp{};
    auto [ptr, ec] = std::to_chars(tmp.data(), tmp.data() + tmp.size(), v);
    return std::string(tmp.data(), ptr);
}

} // namespace

std::string cache_key(std::string_view prompt, const DecodingParams& params) {
    std::string buf = "tidybot-completion-v1;";
    put_field(buf, prompt);
    put_field(buf, params.model_id);
    put_field(buf, shortest(params.temperature));
    put_field(buf, std::to_string(params.max_tokens));
    put_field(buf, std::to_string(params.stop_sequences.size()));
    for (const auto& s : params.stop_sequences) put_field(buf, s);
    return sha256_hex(buf);
}

std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops) {
    auto cut = text.size();
    for (const auto& s : stops) {
        if (s.empty()) continue;
        cut = std::min(cut, text.find(s));
    }
    return std::string(text.substr(0, cut));
}

// --- store records ---------------------------------------------------------

std::string to_jsonl_line(const StoreRecord& r) {
    nlohmann::ordered_json j;
    j["key"] = r.key;
    j["model"] = r.model;
    j["prompt"] = r.prompt;
    nlohmann::ordered_json p;
    p["temperature"] = r.params.temperature;
    p["max_tokens"] = r.params.max_tokens;
    p["stop"] = r.params.stop_sequences;
    j["params"] = std::move(p);
    j["completion"] = r.completion;
    return j.dump() + "\n";
}

StoreRecord store_record_from_jsonl(std::string_view line) {
    json j = json::parse(line.begin(), line.end());
    StoreRecord r;
    r.key = j.at("key").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.completion = j.at("completion").get<std::string>();
    r.params.model_id = r.model;
    if (auto it = j.find("params"); it != j.end()) {
        r.params.temperature = it->value("temperature", 0.0);
        r.params.max_tokens = it->value("max_tokens", 256);
        if (auto s = it->find("stop"); s != it->end()) r.params.stop_sequences = s->get<std::vector<std::string>>();
    }
    return r;
}

StoreRecord make_store_record(const PromptText& prompt, const DecodingParams& params, std::string completion) {
    return {cache_key(prompt.text, params), params.model_id, prompt.text, params, std::move(completion)};
}

ReplayStore::ReplayStore(std::vector<StoreRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) index_.try_emplace(records_[i].key, i);
}

ReplayStore ReplayStore::load(const std::filesystem::path& path) {
    const auto text = read_file(path);
    std::vector<StoreRecord> records;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        ++line_no;
        std::string_view line(text.data() + start, nl - start);
        start = nl + 1;
        if (trim(line).empty()) continue;
        try {
            records.push_back(store_record_from_jsonl(line));
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad replay record: " + e.what(),
                             line_no, "");
        }
    }
    return ReplayStore(std::move(records));
}

const StoreRecord* ReplayStore::find(std::string_view key) const {
    auto it = index_.find(std::string(key));
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::string ReplayStore::content_hash() const {
    std::string all;
    for (const auto& r : records_) all += to_jsonl_line(r);
    return sha256_hex(all);
}

ReplayBackend::ReplayBackend(std::shared_ptr<const ReplayStore> store)
    : store_(std::move(store)), hash_(store_->content_hash()) {}

CompletionRecord ReplayBackend::complete(const PromptText& prompt, const DecodingParams& params) {
    const auto start = Clock::now();
    const auto key = cache_key(prompt.text, params);
    const auto* rec = store_->find(key);
    if (!rec)
        throw MissingReplayEntry("no replay entry for " + std::string(to_string(prompt.kind)) + " prompt (key " +
                                 key.substr(0, 12) + ", model " + params.model_id + ")");
    return {prompt, params, truncate_at_stop(rec->completion, params.stop_sequences), CompletionSource::Replay,
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)};
}

std::string ReplayBackend::fingerprint() const { return "replay:sha256:" + hash_; }

// --- HTTP --------------------------------------------------------------------

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
    const auto& url = options_.endpoint_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (options_.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
}

std::size_t HttpBackend::requests_sent() const noexcept {
    std::lock_guard lock(mu_);
    return requests_;
}

std::string HttpBackend::fingerprint() const { return "http:" + options_.endpoint_url; }

CompletionRecord HttpBackend::complete(const PromptText& prompt, const DecodingParams& params) {
    params.validate();
    nlohmann::ordered_json body;
    body["model"] = params.model_id;
    body["prompt"] = prompt.text;
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    body["stop"] = params.stop_sequences;
    const auto payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    const auto start = Clock::now();
    auto delay = options_.retry.initial_delay;
    std::string last_error;
    double retry_after = -1.0;
    bool rate_limited = false;

    for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            options_.sleep(delay);
            delay = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(delay.count()) * options_.retry.multiplier));
        }
        {
            std::lock_guard lock(mu_);
            ++requests_;
        }
        httplib::Client client(base_);
        client.set_connection_timeout(options_.timeout);
        client.set_read_timeout(options_.timeout);
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            rate_limited = false;
            continue;
        }
        if (res->status == 429) {
            rate_limited = true;
            retry_after = -1.0;
            if (res->has_header("Retry-After")) {
                try {
                    retry_after = std::stod(res->get_header_value("Retry-After"));
                } catch (const std::exception&) {
                }
            }
            last_error = "HTTP 429 rate limited";
            continue;
        }
        rate_limited = false;
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + options_.endpoint_url + ": " +
                                 res->body.substr(0, 200));
        std::string text;
        try {
            auto j = json::parse(res->body);
            text = j.at("choices").at(0).at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw TransportError(std::string("malformed completion response: ") + e.what());
        }
        return {prompt, params, truncate_at_stop(text, params.stop_sequences), CompletionSource::Http,
                std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)};
    }
    if (rate_limited)
        throw RateLimited("rate limited by " + options_.endpoint_url + " after " +
                              std::to_string(options_.retry.max_attempts) + " attempts",
                          retry_after);
    throw TransportError(last_error + " after " + std::to_string(options_.retry.max_attempts) + " attempts (" +
                         options_.endpoint_url + ")");
}

// --- cache ----------------------------------------------------------------------

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path cache_dir)
    : inner_(std::move(inner)), file_(std::move(cache_dir) / kCacheFileName) {
    std::error_code ec;
    std::filesystem::create_directories(file_.parent_path(), ec);
    if (ec) throw ConfigError("cannot create cache directory " + file_.parent_path().string() + ": " + ec.message());
    if (std::filesystem::exists(file_)) {
        auto store = ReplayStore::load(file_);
        for (const auto& r : store.records()) index_.try_emplace(r.key, r.completion);
    }
}

std::string CachingBackend::fingerprint() const { return inner_->fingerprint() + "+cache"; }

CompletionRecord CachingBackend::complete(const PromptText& prompt, const DecodingParams& params) {
    const auto start = Clock::now();
    const auto key = cache_key(prompt.text, params);
    {
        std::lock_guard lock(mu_);
        if (auto it = index_.find(key); it != index_.end())
            return {prompt, params, truncate_at_stop(it->second, params.stop_sequences), CompletionSource::Cache,
                    std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)};
    }
    auto rec = inner_->complete(prompt, params);

    std::lock_guard lock(mu_);
    if (index_.try_emplace(key, rec.completion).second) {
        const auto line = to_jsonl_line(make_store_record(prompt, params, rec.completion));
        const int fd = ::open(file_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd < 0) throw ConfigError("cannot open cache file " + file_.string());
        ::flock(fd, LOCK_EX);
        std::size_t written = 0;
        while (written < line.size()) {
            const auto n = ::write(fd, line.data() + written, line.size() - written);
            if (n <= 0) break;
            written += static_cast<std::size_t>(n);
        }
        ::flock(fd, LOCK_UN);
        ::close(fd);
        if (written != line.size()) throw ConfigError("short write to cache file " + file_.string());
    }
    return rec;
}

// --- config ---------------------------------------------------------------------

void BackendConfig::validate() const {
    if (mode == Mode::Http && (!endpoint_url || endpoint_url->empty()))
        throw ConfigError("http backend requires endpoint_url");
    if (mode == Mode::Replay && !replay_path) throw ConfigError("replay backend requires replay_path");
    if (model_id.empty()) throw ConfigError("model_id must not be empty");
}

DecodingParams BackendConfig::decoding_params() const {
    DecodingParams p;
    p.model_id = model_id;
    return p;
}

BackendConfig load_backend_config(const std::filesystem::path& path) {
    json j;
    const auto text = read_file(path);
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": malformed backend config: " + e.what(), 0, "");
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    BackendConfig cfg;
    try {
        const auto mode = j.value("mode", std::string("replay"));
        if (mode == "http")
            cfg.mode = BackendConfig::Mode::Http;
        else if (mode == "replay")
            cfg.mode = BackendConfig::Mode::Replay;
        else
            throw ParseError(path.string() + ": unknown backend mode '" + mode + "'", 0, "mode");
        if (j.contains("endpoint_url")) cfg.endpoint_url = j["endpoint_url"].get<std::string>();
        if (j.contains("cache_dir")) cfg.cache_dir = resolve(j["cache_dir"].get<std::string>());
        if (j.contains("replay_path")) cfg.replay_path = resolve(j["replay_path"].get<std::string>());
        cfg.model_id = j.value("model_id", std::string(kDefaultModel));
        cfg.api_key_env = j.value("api_key_env", std::string(kDefaultApiKeyEnv));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0, "");
    }
    cfg.validate();
    return cfg;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
    config.validate();
    std::shared_ptr<Backend> backend;
    if (config.mode == BackendConfig::Mode::Replay) {
        backend = std::make_shared<ReplayBackend>(
            std::make_shared<const ReplayStore>(ReplayStore::load(*config.replay_path)));
    } else {
        HttpOptions opts;
        opts.endpoint_url = *config.endpoint_url;
        opts.api_key_env = config.api_key_env;
        backend = std::make_shared<HttpBackend>(std::move(opts));
    }
    if (config.cache_dir) backend = std::make_shared<CachingBackend>(std::move(backend), *config.cache_dir);
    return backend;
}

StoreInfo inspect_store(const std::filesystem::path& path) {
    const auto store = ReplayStore::load(path);
    StoreInfo info;
    info.records = store.size();
    std::set<std::string> keys;
    std::map<std::string, std::size_t> models;
    for (const auto& r : store.records()) {
        keys.insert(r.key);
        ++models[r.model];
    }
    info.unique_keys = keys.size();
    info.per_model.assign(models.begin(), models.end());
    info.content_hash = store.content_hash();
    return info;
}

} // namespace tidybot::llm
