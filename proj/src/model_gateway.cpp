#include "mmicl/model_gateway.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mmicl/error.hpp"

namespace mmicl {

namespace {

using Clock = std::chrono::steady_clock;

std::string majority_label(const std::vector<std::string>& labels) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // count, last position
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& t = tally[labels[i]];
    ++t.first;
    t.second = i;
  }
  const std::string* best = nullptr;
  std::pair<std::size_t, std::size_t> best_key{0, 0};
  for (const auto& [label, key] : tally) {
    // Later blocks are more similar, so the last occurrence breaks ties.
    if (!best || key > best_key) {
      best = &label;
      best_key = key;
    }
  }
  return *best;
}

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  std::string path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

std::string read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read media " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct HttpOutcome {
  std::optional<std::string> text;
  std::optional<std::string> error;
};

HttpOutcome post_once(const HttpEndpoint& ep, const std::string& body) {
  const auto url = split_url(ep.base_url);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::milliseconds(ep.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Post(url.path + "/generate", body, "application/json");
  if (!res) return {std::nullopt, "transport: " + httplib::to_string(res.error())};
  if (res->status == 413) throw Error(ErrorCode::ContextOverflow, res->body);
  if (res->status != 200) return {std::nullopt, "http status " + std::to_string(res->status) + ": " + res->body};
  try {
    const auto j = nlohmann::json::parse(res->body);
    if (j.contains("error") && !j["error"].is_null()) {
      const auto msg = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
      if (msg.find("context") != std::string::npos) throw Error(ErrorCode::ContextOverflow, msg);
      return {std::nullopt, "endpoint error: " + msg};
    }
    return {j.at("text").get<std::string>(), std::nullopt};
  } catch (const nlohmann::json::exception& e) {
    return {std::nullopt, std::string("bad response body: ") + e.what()};
  }
}

}  // namespace

ModelBackend make_backend(std::string_view name, const HttpEndpoint& http) {
  if (name == "mock-shortcut") return MockShortcutMajority{};
  if (name == "mock-echo") return MockEcho{};
  if (name == "http") {
    HttpEndpoint ep = http;
    if (ep.base_url.empty()) {
      if (const char* env = std::getenv("ICL_MODEL_ENDPOINT")) ep.base_url = env;
    }
    if (ep.base_url.empty()) throw Error(ErrorCode::Config, "http backend needs --endpoint or ICL_MODEL_ENDPOINT");
    validate_backend(ep);
    return ep;
  }
  throw Error(ErrorCode::Config, "unknown model '" + std::string(name) + "'");
}

std::string backend_name(const ModelBackend& backend) {
  if (std::holds_alternative<MockShortcutMajority>(backend)) return "mock-shortcut";
  if (std::holds_alternative<MockEcho>(backend)) return "mock-echo";
  return "http";
}

void validate_backend(const ModelBackend& backend) {
  if (const auto* ep = std::get_if<HttpEndpoint>(&backend)) {
    if (ep->timeout_ms <= 0) throw Error(ErrorCode::Config, "timeout must be positive");
    if (ep->parallel < 1) throw Error(ErrorCode::Config, "parallelism must be at least 1");
  }
}

std::string http_payload(const IclSequence& sequence, const HttpEndpoint& endpoint) {
  nlohmann::ordered_json body;
  auto elements = nlohmann::ordered_json::array();
  for (const auto& part : sequence.parts()) {
    nlohmann::ordered_json e;
    if (part.kind == Part::Kind::Text) {
      e["type"] = "text";
      e["text"] = part.content;
    } else {
      e["type"] = "image";
      const auto path = endpoint.media_root.empty() ? part.content : endpoint.media_root + "/" + part.content;
      if (endpoint.inline_images) {
        e["data"] = httplib::detail::base64_encode(read_binary(path));
      } else {
        e["path"] = path;
      }
    }
    elements.push_back(std::move(e));
  }
  body["elements"] = std::move(elements);
  body["max_new_tokens"] = endpoint.max_new_tokens;
  body["temperature"] = 0;
  return body.dump();
}

Prediction predict(const ModelBackend& backend, const IclSequence& sequence, const SentimentScheme& scheme,
                   const LabelMap& label_map) {
  Prediction p;
  p.test_id = sequence.meta.test_id;
  const auto start = Clock::now();
  const auto fallback = label_map.surface(scheme.categories().front());

  if (std::holds_alternative<MockShortcutMajority>(backend)) {
    p.raw_text = sequence.demo_labels.empty() ? fallback : majority_label(sequence.demo_labels);
  } else if (std::holds_alternative<MockEcho>(backend)) {
    p.raw_text = sequence.demo_labels.empty() ? fallback : sequence.demo_labels.back();
  } else {
    const auto& ep = std::get<HttpEndpoint>(backend);
    const auto body = http_payload(sequence, ep);
    HttpOutcome outcome;
    for (unsigned attempt = 0; attempt <= ep.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ep.backoff_ms << (attempt - 1)));
      try {
        outcome = post_once(ep, body);
      } catch (const Error& e) {
        outcome = {std::nullopt, e.what()};
        break;  // context overflow does not improve on retry
      }
      if (outcome.text) break;
    }
    if (outcome.text) {
      p.raw_text = *outcome.text;
    } else {
      p.error = outcome.error;
    }
  }
  if (!p.error) p.parsed = parse_prediction(p.raw_text, scheme, label_map);
  p.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
  return p;
}

std::vector<Prediction> run_batch(const ModelBackend& backend, const std::vector<IclSequence>& sequences,
                                  const SentimentScheme& scheme, const LabelMap& label_map, unsigned parallelism) {
  if (parallelism < 1) throw Error(ErrorCode::InvalidArgument, "parallelism must be at least 1");
  validate_backend(backend);
  std::vector<Prediction> out(sequences.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i] = predict(backend, sequences[i], scheme, label_map);
    } catch (const std::exception& e) {
      out[i].test_id = sequences[i].meta.test_id;
      out[i].error = e.what();
    }
  };
  if (parallelism == 1 || sequences.size() < 2) {
    for (std::size_t i = 0; i < sequences.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(parallelism, sequences.size());
  for (std::size_t t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (auto i = next.fetch_add(1); i < sequences.size(); i = next.fetch_add(1)) run_one(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

LatencySummary summarize_latency(const std::vector<Prediction>& predictions, const std::vector<double>& retrieval_ms) {
  LatencySummary s;
  const auto n = predictions.size();
  if (n == 0) return s;
  double inference = 0.0;
  for (const auto& p : predictions) inference += static_cast<double>(p.latency_ms);
  double retrieval = 0.0;
  for (double r : retrieval_ms) retrieval += r;
  s.mean_inference_ms = inference / static_cast<double>(n);
  s.mean_retrieval_ms = retrieval_ms.empty() ? 0.0 : retrieval / static_cast<double>(retrieval_ms.size());
  s.mean_total_ms = s.mean_inference_ms + s.mean_retrieval_ms;
  return s;
}

}  // namespace mmicl
