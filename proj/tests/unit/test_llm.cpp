#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include "golden_prompts.hpp"
#include "stub_server.hpp"
#include "support.hpp"
#include "tidybot/llm/backend.hpp"

using namespace tidybot;
using namespace tidybot::llm;

namespace {

PromptText prompt(std::string text) { return {std::move(text), PromptKind::ReceptacleSummarization}; }

HttpOptions fast_options(const std::string& url, std::vector<std::chrono::milliseconds>* sleeps = nullptr) {
    HttpOptions o;
    o.endpoint_url = url;
    o.retry.max_attempts = 3;
    o.retry.initial_delay = std::chrono::milliseconds(10);
    o.timeout = std::chrono::seconds(1);
    o.sleep = [sleeps](std::chrono::milliseconds d) {
        if (sleeps) sleeps->push_back(d);
    };
    return o;
}

} // namespace

TEST_SUITE("llm") {
    TEST_CASE("sha256 matches the standard test vector") {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    TEST_CASE("cache_key matches an independently computed digest") {
        CHECK(cache_key(test::golden::prompt(1), DecodingParams{}) ==
              "90e37561347a0d11273b4437ad891ab5eb502c8942b8de78b8c9efafd3f2d9f0");
        DecodingParams p;
        p.model_id = "m";
        p.temperature = 0.7;
        p.max_tokens = 16;
        p.stop_sequences.clear();
        CHECK(cache_key("hi", p) == "d1ec05c12a2fa10ff323e95c33e34a4fe54eddf7d1967fb13aacb6a136332805");
    }

    TEST_CASE("cache_key changes with every field") {
        const DecodingParams base;
        const auto k = cache_key("prompt", base);
        CHECK(cache_key("prompt", base) == k);
        CHECK(cache_key("prompt ", base) != k);
        auto p = base;
        p.model_id = "other";
        CHECK(cache_key("prompt", p) != k);
        p = base;
        p.temperature = 0.5;
        CHECK(cache_key("prompt", p) != k);
        p = base;
        p.max_tokens = 128;
        CHECK(cache_key("prompt", p) != k);
        p = base;
        p.stop_sequences.push_back("\n");
        CHECK(cache_key("prompt", p) != k);
        p = base;
        p.stop_sequences = {"\n", "\n"};
        auto q = base;
        q.stop_sequences = {"\n\n"};
        CHECK(cache_key("prompt", p) != cache_key("prompt", q));
    }

    TEST_CASE("decoding params validate") {
        DecodingParams p;
        CHECK_NOTHROW(p.validate());
        p.temperature = -0.1;
        CHECK_THROWS_AS(p.validate(), ConfigError);
        p = {};
        p.max_tokens = 0;
        CHECK_THROWS_AS(p.validate(), ConfigError);
    }

    TEST_CASE("truncate_at_stop cuts at the earliest stop") {
        CHECK(truncate_at_stop("a\n\nb", {"\n\n"}) == "a");
        CHECK(truncate_at_stop("abcabc", {"c", "b"}) == "a");
        CHECK(truncate_at_stop("abc", {}) == "abc");
        CHECK(truncate_at_stop("abc", {""}) == "abc");
    }

    TEST_CASE("store records round-trip through jsonl") {
        auto r = make_store_record(prompt("line 1\n\"quoted\"\tend"), DecodingParams{}, "out é\n");
        const auto line = to_jsonl_line(r);
        CHECK(line.back() == '\n');
        CHECK(std::count(line.begin(), line.end(), '\n') == 1);
        const auto back = store_record_from_jsonl(line);
        CHECK(back.key == r.key);
        CHECK(back.prompt == r.prompt);
        CHECK(back.completion == r.completion);
        CHECK(back.params == r.params);
    }

    TEST_CASE("replay backend serves recorded completions and refuses unknown prompts") {
        std::vector<StoreRecord> recs{make_store_record(prompt("p1"), DecodingParams{}, "first\n\nignored"),
                                      make_store_record(prompt("p1"), DecodingParams{}, "second"),
                                      make_store_record(prompt("p2"), DecodingParams{}, "other")};
        ReplayBackend b(std::make_shared<const ReplayStore>(recs));
        CHECK(b.complete(prompt("p1"), {}).completion == "first");
        CHECK(b.complete(prompt("p2"), {}).completion == "other");
        CHECK(b.complete(prompt("p2"), {}).source == CompletionSource::Replay);
        CHECK_THROWS_AS(b.complete(prompt("p3"), {}), MissingReplayEntry);
        DecodingParams other;
        other.model_id = "another-model";
        CHECK_THROWS_AS(b.complete(prompt("p1"), other), MissingReplayEntry);
        CHECK(b.fingerprint().starts_with("replay:sha256:"));
    }

    TEST_CASE("replay store load reports bad lines and skips blank ones") {
        test::TempDir dir;
        const auto good = to_jsonl_line(make_store_record(prompt("p"), DecodingParams{}, "c"));
        write_file_atomic(dir.path() / "ok.jsonl", good + "\n" + good);
        CHECK(ReplayStore::load(dir.path() / "ok.jsonl").size() == 2);
        write_file_atomic(dir.path() / "bad.jsonl", good + "{not json}\n");
        try {
            ReplayStore::load(dir.path() / "bad.jsonl");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
        CHECK_THROWS_AS(ReplayStore::load(dir.path() / "missing.jsonl"), ConfigError);
    }

    TEST_CASE("http backend posts the documented request and applies stops") {
        std::string body, auth;
        test::StubServer server([&](const httplib::Request& req, httplib::Response& res) {
            body = req.body;
            auth = req.get_header_value("Authorization");
            test::StubServer::reply(res, " Summary text.\n\nmore");
        });
        ::setenv("TIDYBOT_TEST_KEY", "sk-test", 1);
        auto opts = fast_options(server.url());
        opts.api_key_env = "TIDYBOT_TEST_KEY";
        HttpBackend b(opts);
        const auto rec = b.complete(prompt("hello"), DecodingParams{});
        ::unsetenv("TIDYBOT_TEST_KEY");
        CHECK(rec.completion == " Summary text.");
        CHECK(rec.source == CompletionSource::Http);
        CHECK(auth == "Bearer sk-test");
        const auto j = nlohmann::json::parse(body);
        CHECK(j["model"] == "text-davinci-003");
        CHECK(j["prompt"] == "hello");
        CHECK(j["temperature"] == 0.0);
        CHECK(j["max_tokens"] == 256);
        CHECK(j["stop"] == nlohmann::json::array({"\n\n"}));
        CHECK(b.requests_sent() == 1);
    }

    TEST_CASE("http backend omits the authorization header without a key") {
        std::string auth = "unset";
        test::StubServer server([&](const httplib::Request& req, httplib::Response& res) {
            auth = req.get_header_value("Authorization");
            test::StubServer::reply(res, "x");
        });
        auto opts = fast_options(server.url());
        opts.api_key_env = "TIDYBOT_TEST_KEY_ABSENT";
        HttpBackend(opts).complete(prompt("p"), {});
        CHECK(auth.empty());
    }

    TEST_CASE("http backend retries 5xx with exponential backoff") {
        int calls = 0;
        test::StubServer server([&](const httplib::Request&, httplib::Response& res) {
            if (++calls < 3) {
                res.status = 503;
                return;
            }
            test::StubServer::reply(res, "ok");
        });
        std::vector<std::chrono::milliseconds> sleeps;
        HttpBackend b(fast_options(server.url(), &sleeps));
        CHECK(b.complete(prompt("p"), {}).completion == "ok");
        CHECK(b.requests_sent() == 3);
        REQUIRE(sleeps.size() == 2);
        CHECK(sleeps[0].count() == 10);
        CHECK(sleeps[1].count() == 20);
    }

    TEST_CASE("http backend gives up after max attempts") {
        test::StubServer server([&](const httplib::Request&, httplib::Response& res) { res.status = 500; });
        HttpBackend b(fast_options(server.url()));
        CHECK_THROWS_AS(b.complete(prompt("p"), {}), TransportError);
        CHECK(server.hits() == 3);
    }

    TEST_CASE("http backend surfaces rate limits with Retry-After") {
        test::StubServer server([&](const httplib::Request&, httplib::Response& res) {
            res.status = 429;
            res.set_header("Retry-After", "7");
        });
        HttpBackend b(fast_options(server.url()));
        try {
            b.complete(prompt("p"), {});
            FAIL("expected RateLimited");
        } catch (const RateLimited& e) {
            CHECK(e.retry_after() == doctest::Approx(7.0));
        }
    }

    TEST_CASE("http backend does not retry client errors or bad bodies") {
        test::StubServer server([&](const httplib::Request& req, httplib::Response& res) {
            if (req.body.find("bad-request") != std::string::npos) {
                res.status = 400;
                res.set_content("nope", "text/plain");
            } else {
                res.set_content("{\"choices\": []}", "application/json");
            }
        });
        HttpBackend b(fast_options(server.url()));
        CHECK_THROWS_AS(b.complete(prompt("bad-request"), {}), TransportError);
        CHECK_THROWS_AS(b.complete(prompt("empty"), {}), TransportError);
        CHECK(server.hits() == 2);
    }

    TEST_CASE("http backend reports transport failures") {
        int port = 0;
        {
            httplib::Server s;
            port = s.bind_to_any_port("127.0.0.1");
        }
        HttpBackend b(fast_options("http://127.0.0.1:" + std::to_string(port) + "/v1/completions"));
        CHECK_THROWS_AS(b.complete(prompt("p"), {}), TransportError);
        CHECK(b.requests_sent() == 3);
        CHECK_THROWS_AS(HttpBackend(fast_options("localhost/v1")), ConfigError);
    }

    TEST_CASE("caching backend writes through once and serves hits from disk") {
        test::TempDir dir;
        test::StubServer server([](const httplib::Request& req, httplib::Response& res) {
            test::StubServer::reply(res, "echo:" + nlohmann::json::parse(req.body)["prompt"].get<std::string>());
        });
        {
            CachingBackend c(std::make_shared<HttpBackend>(fast_options(server.url())), dir.path());
            CHECK(c.complete(prompt("a"), {}).completion == "echo:a");
            CHECK(c.complete(prompt("a"), {}).source == CompletionSource::Cache);
            CHECK(c.complete(prompt("b"), {}).completion == "echo:b");
            CHECK(server.hits() == 2);
        }
        const auto store = ReplayStore::load(dir.path() / kCacheFileName);
        CHECK(store.size() == 2);
        {
            CachingBackend c(std::make_shared<HttpBackend>(fast_options(server.url())), dir.path());
            CHECK(c.complete(prompt("a"), {}).completion == "echo:a");
            CHECK(server.hits() == 2);
        }
        ReplayBackend replay(std::make_shared<const ReplayStore>(store));
        CHECK(replay.complete(prompt("b"), {}).completion == "echo:b");
    }

    TEST_CASE("caching backend stays consistent under concurrent misses") {
        test::TempDir dir;
        auto fake = std::make_shared<test::FakeBackend>([](const PromptText& p) { return "r:" + p.text; });
        CachingBackend c(fake, dir.path());
        std::vector<std::jthread> threads;
        for (int t = 0; t < 8; ++t)
            threads.emplace_back([&, t] {
                for (int i = 0; i < 50; ++i) c.complete(prompt("p" + std::to_string((i * 7 + t) % 40)), {});
            });
        threads.clear();
        const auto store = ReplayStore::load(c.cache_file());
        CHECK(store.size() == 40);
        for (const auto& r : store.records()) CHECK(r.completion == "r:" + r.prompt);
    }

    TEST_CASE("backend config resolves relative paths and validates modes") {
        test::TempDir dir;
        write_file_atomic(dir.path() / "cfg.json", R"({"mode": "replay", "replay_path": "r.jsonl", "cache_dir": "c"})");
        const auto cfg = load_backend_config(dir.path() / "cfg.json");
        CHECK(cfg.replay_path == dir.path() / "r.jsonl");
        CHECK(cfg.cache_dir == dir.path() / "c");
        CHECK(cfg.decoding_params() == DecodingParams{});
        write_file_atomic(dir.path() / "http.json", R"({"mode": "http"})");
        CHECK_THROWS_AS(load_backend_config(dir.path() / "http.json"), ConfigError);
        write_file_atomic(dir.path() / "odd.json", R"({"mode": "carrier pigeon"})");
        CHECK_THROWS_AS(load_backend_config(dir.path() / "odd.json"), ParseError);
    }

    TEST_CASE("inspect_store counts records, keys and models") {
        const auto info = inspect_store(test::data("reference/replay.jsonl"));
        CHECK(info.records == 14);
        CHECK(info.unique_keys == 14);
        REQUIRE(info.per_model.size() == 1);
        CHECK(info.per_model[0].first == "text-davinci-003");
        CHECK(info.content_hash.size() == 64);
    }
}
