#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmicl {

enum class TaskType { PostLevel, AspectLevel };

std::string_view to_string(TaskType t);
TaskType parse_task_type(std::string_view s);

enum class Split { Support, Test };

// Ordered category names of a sentiment labelling scheme.
//
// Names must be unique and none may be a prefix of another. Both checks are
// case-insensitive so that a generated answer always maps to at most one
// category.
class SentimentScheme {
 public:
  SentimentScheme(std::string name, std::vector<std::string> categories,
                  TaskType task_type);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& categories() const { return categories_; }
  TaskType task_type() const { return task_type_; }
  std::size_t size() const { return categories_.size(); }

  bool contains(std::string_view category) const;
  /// Position of `category` in the scheme; throws UnknownLabel.
  std::size_t index_of(std::string_view category) const;

 private:
  std::string name_;
  std::vector<std::string> categories_;
  TaskType task_type_;
};

/// Three-class Positive/Neutral/Negative scheme used by every dataset in the
/// built-in presets except MASAD.
SentimentScheme three_class_scheme(TaskType t, std::string name = "sentiment3");

struct Sample {
  std::string id;
  Split split = Split::Support;
  std::string text;
  std::string image_ref;
  std::string label;
  std::optional<std::string> aspect;
  std::optional<std::string> caption;
  std::optional<std::string> gen_image_ref;

  bool operator==(const Sample&) const = default;
};

/// Parses one manifest line per sample. Unknown fields are reported through
/// `warnings` (when given) and otherwise ignored.
std::vector<Sample> load_manifest(const std::filesystem::path& path,
                                  const SentimentScheme& scheme,
                                  std::vector<std::string>* warnings = nullptr);

std::vector<Sample> parse_manifest(std::string_view content,
                                   const SentimentScheme& scheme,
                                   std::vector<std::string>* warnings = nullptr);

std::string serialize_manifest(const std::vector<Sample>& samples);

/// Checks that every image/gen_image path resolves under `root`.
void check_asset_paths(const std::vector<Sample>& samples,
                       const std::filesystem::path& root);

/// Stratified, seeded subset of the support partition with
/// ceil(fraction * |support|) members, returned in ascending id order.
std::vector<Sample> sample_support_subset(const std::vector<Sample>& samples,
                                          const SentimentScheme& scheme,
                                          double fraction, std::uint64_t seed);

std::vector<Sample> support_of(const std::vector<Sample>& samples);
std::vector<Sample> test_of(const std::vector<Sample>& samples);

/// Per-category support counts in scheme order.
std::map<std::string, std::size_t> count_by_label(const std::vector<Sample>& samples);

struct DatasetConfig {
  SentimentScheme scheme;
  std::filesystem::path manifest_path;
  std::filesystem::path embedding_dir;
  std::optional<std::string> preset;
};

/// Reads a `key = value` dataset configuration. Relative paths resolve
/// against the directory of the config file.
///
/// Recognised keys: name, categories (comma separated), task_type
/// (post|aspect), manifest, embeddings, preset. Lines starting with '#'
/// are comments.
DatasetConfig load_dataset_config(const std::filesystem::path& path);

}  // namespace mmicl
