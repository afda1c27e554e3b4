#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <unistd.h>

#include "tidybot/core/dataset.hpp"
#include "tidybot/core/errors.hpp"
#include "tidybot/llm/backend.hpp"

namespace tidybot::test {

inline std::filesystem::path source_dir() { return TIDYBOT_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& rel) { return source_dir() / "tests" / "fixtures" / rel; }
inline std::filesystem::path data(const std::string& rel) { return source_dir() / "data" / rel; }

/// Answers prompts through a callback and records every prompt it saw.
class FakeBackend final : public llm::Backend {
public:
    using Fn = std::function<std::string(const PromptText&)>;
    explicit FakeBackend(Fn fn) : fn_(std::move(fn)) {}

    llm::CompletionRecord complete(const PromptText& prompt, const llm::DecodingParams& params) override {
        {
            std::lock_guard lock(mu_);
            prompts_.push_back(prompt);
        }
        return {prompt, params, fn_(prompt), llm::CompletionSource::Replay, {}};
    }
    [[nodiscard]] std::string fingerprint() const override { return "fake"; }

    std::vector<PromptText> prompts() const {
        std::lock_guard lock(mu_);
        return prompts_;
    }

private:
    Fn fn_;
    mutable std::mutex mu_;
    std::vector<PromptText> prompts_;
};

/// A temporary directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mutex mu;
        static int counter = 0;
        std::lock_guard lock(mu);
        path_ = std::filesystem::temp_directory_path() /
                ("tidybot_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline std::vector<ObjectName> objs(std::initializer_list<const char*> names) {
    std::vector<ObjectName> out;
    for (const auto* n : names) out.emplace_back(n);
    return out;
}

inline std::vector<ReceptacleName> recs(std::initializer_list<const char*> names) {
    std::vector<ReceptacleName> out;
    for (const auto* n : names) out.emplace_back(n);
    return out;
}

inline std::vector<Placement> placements(std::initializer_list<std::pair<const char*, const char*>> pairs) {
    std::vector<Placement> out;
    for (const auto& [o, r] : pairs) out.push_back({ObjectName(o), ReceptacleName(r)});
    return out;
}

inline std::vector<PrimitiveChoice> choices(std::initializer_list<std::pair<const char*, Primitive>> pairs) {
    std::vector<PrimitiveChoice> out;
    for (const auto& [o, p] : pairs) out.push_back({ObjectName(o), p});
    return out;
}

} // namespace tidybot::test
