#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace annotab::llm {

struct LlmParams {
    std::string model_name;
    double temperature = 0.0;
    int max_output_tokens = 2048;
};

struct CompletionRecord {
    std::string prompt_digest;  // sha256 of the prompt bytes
    LlmParams params;
    std::string response;
    std::string timestamp;  // UTC, ISO-8601
};

// (prompt digest, params) -> store key.
std::string cache_key(const std::string& prompt_digest, const LlmParams& params);

std::string utc_now_iso8601();

class CompletionBackend {
  public:
    virtual ~CompletionBackend() = default;
    // Returns the model's text for a single-shot prompt.
    virtual std::string complete(const std::string& prompt, const LlmParams& params) = 0;
};

// Append-only JSONL store of CompletionRecords. Lookup is last-write-wins;
// the log keeps every append. A corrupt trailing record found on open is
// truncated with a warning and earlier records stay intact.
class RecordStore {
  public:
    explicit RecordStore(std::string path);
    std::optional<std::string> lookup(const std::string& prompt_digest,
                                      const LlmParams& params) const;
    void append(const CompletionRecord& record);  // durable before returning
    std::size_t size() const;
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> by_key_;
};

// Replay-only backend: every completion must be present in the store.
class ReplayBackend : public CompletionBackend {
  public:
    explicit ReplayBackend(std::shared_ptr<RecordStore> store) : store_(std::move(store)) {}
    std::string complete(const std::string& prompt, const LlmParams& params) override;

  private:
    std::shared_ptr<RecordStore> store_;
};

struct HttpConfig {
    std::string url;      // full chat-completion endpoint URL
    std::string api_key;  // sent as "Authorization: Bearer <key>" when set
    int max_attempts = 3;
    std::vector<int> backoff_seconds = {1, 4, 16};
    int timeout_seconds = 120;
};

// Generic HTTP chat-completion client. Retries timeouts, 429 and 5xx with
// exponential backoff.
class HttpBackend : public CompletionBackend {
  public:
    explicit HttpBackend(HttpConfig config) : config_(std::move(config)) {}
    std::string complete(const std::string& prompt, const LlmParams& params) override;

  private:
    HttpConfig config_;
};

// Record mode: serve from the store when possible, otherwise call the inner
// backend and persist the new record before returning.
class RecordingBackend : public CompletionBackend {
  public:
    RecordingBackend(std::shared_ptr<CompletionBackend> inner,
                     std::shared_ptr<RecordStore> store)
        : inner_(std::move(inner)), store_(std::move(store)) {}
    std::string complete(const std::string& prompt, const LlmParams& params) override;

  private:
    std::shared_ptr<CompletionBackend> inner_;
    std::shared_ptr<RecordStore> store_;
};

// Caps the number of in-flight complete() calls.
class BoundedBackend : public CompletionBackend {
  public:
    BoundedBackend(std::shared_ptr<CompletionBackend> inner, int max_in_flight = 8);
    std::string complete(const std::string& prompt, const LlmParams& params) override;

  private:
    std::shared_ptr<CompletionBackend> inner_;
    struct Semaphore;
    std::shared_ptr<Semaphore> semaphore_;
};

}  // namespace annotab::llm
