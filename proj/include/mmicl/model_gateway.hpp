#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmicl/corpus.hpp"
#include "mmicl/sequencing.hpp"

namespace mmicl {

struct MockShortcutMajority {};
struct MockEcho {};

struct HttpEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  int timeout_ms = 30000;
  unsigned parallel = 1;
  unsigned retries = 2;
  int backoff_ms = 100;
  int max_new_tokens = 4;
  bool inline_images = false;  // send images as base64 instead of paths
  std::string media_root;      // prefix for relative image paths
};

using ModelBackend = std::variant<MockShortcutMajority, MockEcho, HttpEndpoint>;

/// "mock-shortcut", "mock-echo" or "http".
ModelBackend make_backend(std::string_view name, const HttpEndpoint& http = {});
std::string backend_name(const ModelBackend& backend);
void validate_backend(const ModelBackend& backend);

struct Prediction {
  std::string test_id;
  std::string raw_text;
  std::optional<std::string> parsed;
  std::int64_t latency_ms = 0;
  std::optional<std::string> error;
};

/// JSON body sent to `{base}/generate`.
std::string http_payload(const IclSequence& sequence, const HttpEndpoint& endpoint);

Prediction predict(const ModelBackend& backend, const IclSequence& sequence,
                   const SentimentScheme& scheme, const LabelMap& label_map);

struct LatencySummary {
  double mean_retrieval_ms = 0.0;
  double mean_inference_ms = 0.0;
  double mean_total_ms = 0.0;
};

/// Predicts every sequence with at most `parallelism` in flight. Failures are
/// recorded per sample and never abort the batch. Output order equals input
/// order.
std::vector<Prediction> run_batch(const ModelBackend& backend, const std::vector<IclSequence>& sequences,
                                  const SentimentScheme& scheme, const LabelMap& label_map,
                                  unsigned parallelism = 1);

LatencySummary summarize_latency(const std::vector<Prediction>& predictions,
                                 const std::vector<double>& retrieval_ms = {});

}  // namespace mmicl
