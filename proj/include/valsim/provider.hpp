#pragma once

// Chat-completion providers: an HTTP client with retries, pacing and audit
// logging behind per-vendor request adapters, and a deterministic scripted
// stand-in used as a test oracle.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "valsim/error.hpp"
#include "valsim/prompts.hpp"

namespace valsim {

// Canned behaviour of the scripted provider.
struct ScriptedSettings {
  // +1: scale max on items keyed to the persona, min elsewhere. -1 inverts.
  // 0: the same midpoint rating everywhere.
  double alignment = 1.0;
  std::uint64_t noise_seed = 0;
  // Trust and IOS ratings by similarity between persona and counterpart,
  // indexed by SimilarityLevel.
  std::array<int, 4> trust_by_level{5, 4, 3, 1};
  std::array<int, 4> ios_by_level{7, 5, 4, 1};
  // PVQ item indices answered with an unparseable reply.
  std::vector<int> invalid_items;
  // Simulated request latency.
  std::chrono::microseconds latency{0};
};

struct ProviderConfig {
  std::string name;
  // "openai", "anthropic", "gemini" or "scripted".
  std::string adapter = "openai";
  std::string endpoint;
  std::string model_id;
  int max_tokens = 1000;
  // Sent verbatim in the request body. Empty unless configured.
  nlohmann::json extra_params = nlohmann::json::object();
  std::string auth_env_var;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 5;
  int parallelism = 4;
  // Token bucket refill rate; 0 disables pacing.
  double requests_per_minute = 0.0;
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::milliseconds backoff_max{60000};
  ScriptedSettings scripted;
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProviderConfig& c);

struct Attempt {
  int attempt = 0;
  int http_status = 0;  // 0 when no response arrived
  std::string error;
  std::chrono::milliseconds delay_before_next{0};
};

// Retries exhausted, non-retryable status, or unusable response body.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::vector<Attempt> attempts)
      : Error(what), attempts_(std::move(attempts)) {}
  const std::vector<Attempt>& attempts() const { return attempts_; }

 private:
  std::vector<Attempt> attempts_;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual const std::string& name() const = 0;
  // Returns the assistant text. Safe to call from several threads.
  virtual std::string complete(const MessageSeq& messages) = 0;
};

// ---- HTTP plumbing ---------------------------------------------------------

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Network failure or timeout before a status line arrived.
class NetworkError : public Error {
 public:
  NetworkError(const std::string& what, bool timeout) : Error(what), timeout_(timeout) {}
  bool timeout() const { return timeout_; }

 private:
  bool timeout_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws NetworkError when no response was received.
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// HTTPS client over cpp-httplib.
std::shared_ptr<Transport> make_https_transport();

// Builds the vendor request and extracts the reply text.
class ChatAdapter {
 public:
  virtual ~ChatAdapter() = default;
  virtual HttpRequest build(const ProviderConfig& config, const MessageSeq& messages,
                            const std::string& api_key) const = 0;
  // Throws Error if the body does not carry assistant text.
  virtual std::string parse(const std::string& body) const = 0;
};

std::unique_ptr<ChatAdapter> make_adapter(std::string_view name);

bool is_retryable_status(int status);

// base * 2^(attempt-1), capped. attempt is 1-based.
std::chrono::milliseconds backoff_delay(const ProviderConfig& config, int attempt);

// Bounds the number of requests in flight.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit);
  void acquire();
  void release();
  int limit() const { return limit_; }

  class Slot {
   public:
    explicit Slot(ConcurrencyLimiter& l) : l_(&l) { l_->acquire(); }
    ~Slot() { l_->release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyLimiter* l_;
  };

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int in_use_ = 0;
};

// Client-side token bucket. Capacity one request; refills at `per_minute`.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;
  explicit TokenBucket(double per_minute);
  // Returns how long the caller must wait before sending; reserves the slot.
  std::chrono::nanoseconds reserve(Clock::time_point now = Clock::now());

 private:
  std::mutex mu_;
  double per_minute_;
  Clock::time_point next_free_{};
};

// Receives one JSON document per attempt. Authorization values are redacted
// before the sink sees them.
using AuditSink = std::function<void(const nlohmann::json&)>;

// Writes audit documents as JSON lines to a file, serialized by a mutex.
AuditSink make_file_audit_sink(const std::string& path);

using Sleeper = std::function<void(std::chrono::nanoseconds)>;

class HttpProvider final : public Provider {
 public:
  // Reads the API key from config.auth_env_var; throws ConfigError if it is
  // unset, before any request.
  HttpProvider(ProviderConfig config, std::shared_ptr<Transport> transport, AuditSink audit = {},
               Sleeper sleeper = {});

  const std::string& name() const override { return config_.name; }
  std::string complete(const MessageSeq& messages) override;

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  std::string api_key_;
  std::shared_ptr<Transport> transport_;
  std::unique_ptr<ChatAdapter> adapter_;
  AuditSink audit_;
  Sleeper sleeper_;
  ConcurrencyLimiter limiter_;
  TokenBucket bucket_;
};

// ---- scripted --------------------------------------------------------------

struct ScriptedPolicy {
  ValueRef persona_value = BasicValue::power;
  double alignment = 1.0;
  std::uint64_t noise_seed = 0;
};

// Pure reply function of the scripted provider. PVQ items follow the
// alignment rule; dialogue turns produce a fixed-form utterance naming the
// persona; trust and IOS items rate by similarity to the counterpart.
// Untagged requests get the PVQ midpoint.
std::string scripted_complete(const ScriptedPolicy& policy, const MessageSeq& messages,
                              const ScriptedSettings& settings = {}, const CircumplexConfig& circumplex = {});

class ScriptedProvider final : public Provider {
 public:
  ScriptedProvider(std::string name, ScriptedSettings settings, CircumplexConfig circumplex = {});

  const std::string& name() const override { return name_; }
  std::string complete(const MessageSeq& messages) override;

  std::uint64_t calls() const;

 private:
  std::string name_;
  ScriptedSettings settings_;
  CircumplexConfig circumplex_;
  mutable std::mutex mu_;
  std::uint64_t calls_ = 0;
};

// Builds the provider a config describes. `audit` may be empty.
std::unique_ptr<Provider> make_provider(const ProviderConfig& config, const CircumplexConfig& circumplex,
                                        AuditSink audit = {});

}  // namespace valsim
