#include "annotab/llmclient.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "annotab/digest.hpp"
#include "annotab/errors.hpp"

namespace annotab::llm {

namespace {

std::string format_temperature(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", t);
    return buf;
}

}  // namespace

std::string cache_key(const std::string& prompt_digest, const LlmParams& params) {
    return prompt_digest + "|" + params.model_name + "|" + format_temperature(params.temperature) +
           "|" + std::to_string(params.max_output_tokens);
}

std::string utc_now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RecordStore::RecordStore(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // fresh store
    std::string line;
    std::uintmax_t good_bytes = 0;
    while (std::getline(in, line)) {
        // A record is only durable once its newline is on disk.
        bool had_newline = !in.eof();
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        bool good = had_newline && !doc.is_discarded() && doc.is_object() &&
                    doc.contains("prompt_digest") && doc.contains("response") &&
                    doc.contains("model_name") && doc.contains("temperature") &&
                    doc.contains("max_output_tokens");
        if (!good) break;
        LlmParams p{doc["model_name"].get<std::string>(), doc["temperature"].get<double>(),
                    doc["max_output_tokens"].get<int>()};
        by_key_[cache_key(doc["prompt_digest"].get<std::string>(), p)] =
            doc["response"].get<std::string>();
        good_bytes += line.size() + 1;
    }
    in.close();
    if (std::filesystem::file_size(path_) > good_bytes) {
        std::cerr << "warning: truncating corrupt trailing record in " << path_ << "\n";
        std::filesystem::resize_file(path_, good_bytes);
    }
}

std::optional<std::string> RecordStore::lookup(const std::string& prompt_digest,
                                               const LlmParams& params) const {
    std::lock_guard lock(mutex_);
    auto it = by_key_.find(cache_key(prompt_digest, params));
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
}

void RecordStore::append(const CompletionRecord& record) {
    nlohmann::ordered_json doc;
    doc["prompt_digest"] = record.prompt_digest;
    doc["model_name"] = record.params.model_name;
    doc["temperature"] = record.params.temperature;
    doc["max_output_tokens"] = record.params.max_output_tokens;
    doc["response"] = record.response;
    doc["timestamp"] = record.timestamp;
    std::string line = doc.dump();

    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw StoreIoError("cannot open store for append: " + path_);
    out << line << '\n';
    out.flush();
    if (!out) throw StoreIoError("append failed: " + path_);
    by_key_[cache_key(record.prompt_digest, record.params)] = record.response;
}

std::size_t RecordStore::size() const {
    std::lock_guard lock(mutex_);
    return by_key_.size();
}

std::string ReplayBackend::complete(const std::string& prompt, const LlmParams& params) {
    std::string digest = sha256_hex(prompt);
    if (auto hit = store_->lookup(digest, params)) return *hit;
    throw ReplayMiss("no recorded completion for prompt digest " + digest);
}

std::string HttpBackend::complete(const std::string& prompt, const LlmParams& params) {
    // Split "<scheme>://<host>[:port]" from the path.
    std::string base = config_.url;
    std::string path = "/";
    auto scheme_end = base.find("://");
    if (scheme_end != std::string::npos) {
        auto path_start = base.find('/', scheme_end + 3);
        if (path_start != std::string::npos) {
            path = base.substr(path_start);
            base = base.substr(0, path_start);
        }
    }

    nlohmann::json body;
    body["model"] = params.model_name;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_output_tokens;
    const std::string payload = body.dump();

    std::string last_error = "no attempts made";
    bool rate_limited = false;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::size_t i = static_cast<std::size_t>(attempt - 1);
            int delay = i < config_.backoff_seconds.size() ? config_.backoff_seconds[i]
                                                           : config_.backoff_seconds.back();
            std::this_thread::sleep_for(std::chrono::seconds(delay));
        }
        httplib::Client client(base);
        client.set_read_timeout(config_.timeout_seconds, 0);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429) {
            rate_limited = true;
            last_error = "HTTP 429";
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded()) throw BackendUnavailable("malformed completion response body");
        try {
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendUnavailable("unexpected completion response shape: " +
                                     std::string(e.what()));
        }
    }
    if (rate_limited) throw RateLimited("retries exhausted: " + last_error);
    throw BackendUnavailable("retries exhausted: " + last_error);
}

std::string RecordingBackend::complete(const std::string& prompt, const LlmParams& params) {
    std::string digest = sha256_hex(prompt);
    if (auto hit = store_->lookup(digest, params)) return *hit;
    std::string response = inner_->complete(prompt, params);
    store_->append({digest, params, response, utc_now_iso8601()});
    return response;
}

struct BoundedBackend::Semaphore {
    std::mutex mutex;
    std::condition_variable cv;
    int available;
    explicit Semaphore(int n) : available(n) {}
    void acquire() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard lock(mutex);
            ++available;
        }
        cv.notify_one();
    }
};

BoundedBackend::BoundedBackend(std::shared_ptr<CompletionBackend> inner, int max_in_flight)
    : inner_(std::move(inner)), semaphore_(std::make_shared<Semaphore>(max_in_flight)) {}

std::string BoundedBackend::complete(const std::string& prompt, const LlmParams& params) {
    semaphore_->acquire();
    try {
        std::string r = inner_->complete(prompt, params);
        semaphore_->release();
        return r;
    } catch (...) {
        semaphore_->release();
        throw;
    }
}

}  // namespace annotab::llm
