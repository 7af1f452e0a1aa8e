#pragma once

// Line-delimited JSON encodings of every intermediate artifact.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmicl/metrics.hpp"
#include "mmicl/model_gateway.hpp"
#include "mmicl/selection.hpp"
#include "mmicl/sequencing.hpp"

namespace mmicl {

/// Shortest decimal that survives a round trip through 9 significant digits.
double round_significant9(double v);

nlohmann::ordered_json to_json(const SelectionResult& s);
SelectionResult selection_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const IclSequence& s);
IclSequence sequence_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const EvaluationReport& r);

template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mmicl
