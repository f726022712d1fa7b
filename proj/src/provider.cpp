#include "valsim/provider.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "valsim/error.hpp"

namespace valsim {
namespace {

using json = nlohmann::json;

std::string join_url(std::string base, std::string_view path) {
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + std::string(path);
}

json openai_messages(const MessageSeq& messages) {
  json out = json::array();
  for (const auto& m : messages.messages())
    out.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  return out;
}

void merge_extra(json& body, const json& extra) {
  if (!extra.is_object()) return;
  for (auto it = extra.begin(); it != extra.end(); ++it) body[it.key()] = it.value();
}

class OpenAiAdapter final : public ChatAdapter {
 public:
  HttpRequest build(const ProviderConfig& config, const MessageSeq& messages,
                    const std::string& api_key) const override {
    json body{{"model", config.model_id}, {"messages", openai_messages(messages)}, {"max_tokens", config.max_tokens}};
    merge_extra(body, config.extra_params);
    HttpRequest req;
    req.url = join_url(config.endpoint.empty() ? "https://api.openai.com/v1" : config.endpoint, "/chat/completions");
    req.headers = {{"Authorization", "Bearer " + api_key}, {"Content-Type", "application/json"}};
    req.body = body.dump();
    req.timeout = config.timeout;
    return req;
  }

  std::string parse(const std::string& body) const override {
    const json j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error("reply has no text content");
    return content.get<std::string>();
  }
};

class AnthropicAdapter final : public ChatAdapter {
 public:
  HttpRequest build(const ProviderConfig& config, const MessageSeq& messages,
                    const std::string& api_key) const override {
    json body{{"model", config.model_id}, {"max_tokens", config.max_tokens}};
    json msgs = json::array();
    for (const auto& m : messages.messages()) {
      if (m.role == Role::system) {
        body["system"] = m.content;
        continue;
      }
      msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    body["messages"] = std::move(msgs);
    merge_extra(body, config.extra_params);
    HttpRequest req;
    req.url = join_url(config.endpoint.empty() ? "https://api.anthropic.com/v1" : config.endpoint, "/messages");
    req.headers = {{"x-api-key", api_key},
                   {"anthropic-version", "2023-06-01"},
                   {"Content-Type", "application/json"}};
    req.body = body.dump();
    req.timeout = config.timeout;
    return req;
  }

  std::string parse(const std::string& body) const override {
    const json j = json::parse(body);
    std::string text;
    for (const auto& block : j.at("content"))
      if (block.value("type", "") == "text") text += block.at("text").get<std::string>();
    return text;
  }
};

class GeminiAdapter final : public ChatAdapter {
 public:
  HttpRequest build(const ProviderConfig& config, const MessageSeq& messages,
                    const std::string& api_key) const override {
    json body = json::object();
    json contents = json::array();
    for (const auto& m : messages.messages()) {
      if (m.role == Role::system) {
        body["systemInstruction"] = {{"parts", json::array({{{"text", m.content}}})}};
        continue;
      }
      contents.push_back({{"role", m.role == Role::assistant ? "model" : "user"},
                          {"parts", json::array({{{"text", m.content}}})}});
    }
    body["contents"] = std::move(contents);
    body["generationConfig"] = {{"maxOutputTokens", config.max_tokens}};
    merge_extra(body, config.extra_params);
    HttpRequest req;
    req.url = join_url(config.endpoint.empty() ? "https://generativelanguage.googleapis.com/v1beta" : config.endpoint,
                       "/models/" + config.model_id + ":generateContent");
    req.headers = {{"x-goog-api-key", api_key}, {"Content-Type", "application/json"}};
    req.body = body.dump();
    req.timeout = config.timeout;
    return req;
  }

  std::string parse(const std::string& body) const override {
    const json j = json::parse(body);
    std::string text;
    for (const auto& part : j.at("candidates").at(0).at("content").at("parts"))
      if (part.contains("text")) text += part.at("text").get<std::string>();
    return text;
  }
};

bool is_secret_header(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "authorization" || lower == "x-api-key" || lower == "x-goog-api-key";
}

json audit_request(const HttpRequest& req) {
  json headers = json::object();
  for (const auto& [k, v] : req.headers) headers[k] = is_secret_header(k) ? "[REDACTED]" : v;
  json body = json::parse(req.body, nullptr, false);
  return {{"url", req.url}, {"headers", headers}, {"body", body.is_discarded() ? json(req.body) : body}};
}

}  // namespace

// ---- config ----------------------------------------------------------------

ProviderConfig provider_config_from_json(const json& j) {
  ProviderConfig c;
  c.name = j.at("name").get<std::string>();
  c.adapter = j.value("adapter", c.adapter);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model_id = j.value("model_id", c.model_id);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  if (j.contains("extra_params")) c.extra_params = j.at("extra_params");
  c.auth_env_var = j.value("auth_env_var", c.auth_env_var);
  c.timeout = std::chrono::milliseconds(static_cast<long long>(j.value("timeout_s", 60.0) * 1000));
  c.max_retries = j.value("max_retries", c.max_retries);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
  c.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", 1000));
  c.backoff_max = std::chrono::milliseconds(j.value("backoff_max_ms", 60000));
  if (c.parallelism < 1) throw ConfigError("provider '" + c.name + "': parallelism must be positive");
  if (c.max_retries < 0) throw ConfigError("provider '" + c.name + "': max_retries must be non-negative");
  if (c.max_tokens < 1) throw ConfigError("provider '" + c.name + "': max_tokens must be positive");
  if (auto s = j.find("scripted"); s != j.end()) {
    auto& ss = c.scripted;
    ss.alignment = s->value("alignment", ss.alignment);
    ss.noise_seed = s->value("noise_seed", ss.noise_seed);
    if (s->contains("trust_by_level")) ss.trust_by_level = s->at("trust_by_level").get<std::array<int, 4>>();
    if (s->contains("ios_by_level")) ss.ios_by_level = s->at("ios_by_level").get<std::array<int, 4>>();
    if (s->contains("invalid_items")) ss.invalid_items = s->at("invalid_items").get<std::vector<int>>();
    ss.latency = std::chrono::microseconds(s->value("latency_us", 0LL));
    if (ss.alignment < -1.0 || ss.alignment > 1.0)
      throw ConfigError("provider '" + c.name + "': scripted alignment must lie in [-1, 1]");
  }
  if (c.adapter != "scripted") (void)make_adapter(c.adapter);
  return c;
}

json to_json(const ProviderConfig& c) {
  json j{{"name", c.name},
         {"adapter", c.adapter},
         {"endpoint", c.endpoint},
         {"model_id", c.model_id},
         {"max_tokens", c.max_tokens},
         {"extra_params", c.extra_params},
         {"auth_env_var", c.auth_env_var}};
  if (c.adapter == "scripted") {
    j["scripted"] = {{"alignment", c.scripted.alignment},
                     {"noise_seed", c.scripted.noise_seed},
                     {"trust_by_level", c.scripted.trust_by_level},
                     {"ios_by_level", c.scripted.ios_by_level},
                     {"invalid_items", c.scripted.invalid_items}};
  }
  return j;
}

std::unique_ptr<ChatAdapter> make_adapter(std::string_view name) {
  if (name == "openai") return std::make_unique<OpenAiAdapter>();
  if (name == "anthropic") return std::make_unique<AnthropicAdapter>();
  if (name == "gemini") return std::make_unique<GeminiAdapter>();
  throw ConfigError("unknown provider adapter '" + std::string(name) + "'");
}

bool is_retryable_status(int status) {
  return status == 408 || status == 409 || status == 425 || status == 429 || (status >= 500 && status <= 599);
}

std::chrono::milliseconds backoff_delay(const ProviderConfig& config, int attempt) {
  auto delay = config.backoff_base;
  for (int i = 1; i < attempt && delay < config.backoff_max; ++i) delay *= 2;
  return std::min(delay, config.backoff_max);
}

// ---- pacing ----------------------------------------------------------------

ConcurrencyLimiter::ConcurrencyLimiter(int limit) : limit_(limit < 1 ? 1 : limit) {}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return in_use_ < limit_; });
  ++in_use_;
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_use_;
  }
  cv_.notify_one();
}

TokenBucket::TokenBucket(double per_minute) : per_minute_(per_minute) {}

std::chrono::nanoseconds TokenBucket::reserve(Clock::time_point now) {
  if (per_minute_ <= 0.0) return std::chrono::nanoseconds(0);
  const auto interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(60.0 / per_minute_));
  std::lock_guard lock(mu_);
  const auto slot = std::max(now, next_free_);
  next_free_ = slot + interval;
  return slot - now;
}

AuditSink make_file_audit_sink(const std::string& path) {
  auto out = std::make_shared<std::ofstream>(path, std::ios::app);
  if (!*out) throw ConfigError("cannot open audit log '" + path + "'");
  auto mu = std::make_shared<std::mutex>();
  return [out, mu](const json& doc) {
    std::lock_guard lock(*mu);
    *out << doc.dump() << '\n';
    out->flush();
  };
}

// ---- HTTP provider ---------------------------------------------------------

HttpProvider::HttpProvider(ProviderConfig config, std::shared_ptr<Transport> transport, AuditSink audit,
                           Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      adapter_(make_adapter(config_.adapter)),
      audit_(std::move(audit)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); })),
      limiter_(config_.parallelism),
      bucket_(config_.requests_per_minute) {
  if (config_.auth_env_var.empty())
    throw ConfigError("provider '" + config_.name + "' has no auth_env_var configured");
  const char* key = std::getenv(config_.auth_env_var.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("provider '" + config_.name + "': environment variable " + config_.auth_env_var +
                      " is not set");
  api_key_ = key;
}

std::string HttpProvider::complete(const MessageSeq& messages) {
  if (messages.empty()) throw ValidationError("cannot send an empty message sequence");
  const HttpRequest request = adapter_->build(config_, messages, api_key_);
  std::vector<Attempt> attempts;
  const int max_attempts = config_.max_retries + 1;

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (auto wait = bucket_.reserve(); wait.count() > 0) sleeper_(wait);

    Attempt record;
    record.attempt = attempt;
    bool transient = false;
    std::optional<HttpResponse> response;
    {
      ConcurrencyLimiter::Slot slot(limiter_);
      try {
        response = transport_->post(request);
      } catch (const NetworkError& e) {
        record.error = e.what();
        transient = true;
      }
    }

    if (audit_) {
      json doc{{"provider", config_.name}, {"attempt", attempt}, {"request", audit_request(request)}};
      if (response) doc["response"] = {{"status", response->status}, {"body", response->body}};
      else doc["error"] = record.error;
      audit_(doc);
    }

    if (response) {
      record.http_status = response->status;
      if (response->status >= 200 && response->status < 300) {
        try {
          return adapter_->parse(response->body);
        } catch (const std::exception& e) {
          record.error = std::string("unusable response body: ") + e.what();
          attempts.push_back(record);
          throw TransportError("provider '" + config_.name + "': " + record.error, std::move(attempts));
        }
      }
      record.error = "HTTP " + std::to_string(response->status);
      transient = is_retryable_status(response->status);
    }

    if (!transient) {
      attempts.push_back(record);
      throw TransportError("provider '" + config_.name + "': non-retryable " + record.error, std::move(attempts));
    }
    if (attempt < max_attempts) record.delay_before_next = backoff_delay(config_, attempt);
    attempts.push_back(record);
    if (attempt < max_attempts) sleeper_(record.delay_before_next);
  }
  // Build the message first: argument evaluation order would let the move win.
  const std::string what = "provider '" + config_.name + "': gave up after " + std::to_string(max_attempts) +
                           " attempts (" + attempts.back().error + ")";
  throw TransportError(what, std::move(attempts));
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config, const CircumplexConfig& circumplex,
                                        AuditSink audit) {
  if (config.adapter == "scripted") return std::make_unique<ScriptedProvider>(config.name, config.scripted, circumplex);
  return std::make_unique<HttpProvider>(config, make_https_transport(), std::move(audit));
}

}  // namespace valsim
