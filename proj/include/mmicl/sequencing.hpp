#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmicl/corpus.hpp"
#include "mmicl/selection.hpp"

namespace mmicl {

enum class Modality { Image, Caption, Text, GeneratedImage };

/// Subset of {I, C, T, G}; spelled "I,C,T" in canonical I, C, T, G order.
class ModalityComposition {
 public:
  ModalityComposition() = default;
  static ModalityComposition parse(std::string_view code);
  static ModalityComposition of(std::initializer_list<Modality> ms);
  /// The 15 non-empty compositions in table order.
  static std::vector<ModalityComposition> all();

  bool has(Modality m) const { return (bits_ >> static_cast<unsigned>(m)) & 1u; }
  bool empty() const { return bits_ == 0; }
  bool subset_of(const ModalityComposition& o) const { return (bits_ & ~o.bits_) == 0; }
  std::string code() const;

  bool operator==(const ModalityComposition&) const = default;

 private:
  unsigned bits_ = 0;
};

/// Category -> surface token used inside the prompt and the answers.
class LabelMap {
 public:
  static LabelMap identity(const SentimentScheme& scheme);
  /// Positive->dog, Neutral->cat, Negative->bird; other categories unchanged.
  static LabelMap animals(const SentimentScheme& scheme);
  /// "identity", "animals", or explicit "Positive=dog,Neutral=cat,...".
  static LabelMap parse(std::string_view spec, const SentimentScheme& scheme);

  LabelMap(std::string id, std::vector<std::pair<std::string, std::string>> pairs);

  const std::string& id() const { return id_; }
  const std::string& surface(std::string_view category) const;
  std::optional<std::string> category_of(std::string_view token) const;
  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }

 private:
  std::string id_;
  std::vector<std::pair<std::string, std::string>> pairs_;
};

struct Part {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string content;  // text, or a media path

  bool operator==(const Part&) const = default;
};

/// One rendered input. Media come first, then the text lines.
struct Block {
  std::vector<Part> media;
  std::vector<std::string> lines;

  std::string text() const;
  std::vector<Part> parts() const;
};

struct SequenceMeta {
  std::string test_id;
  std::string strategy;
  std::string protocol;
  std::string composition;
  std::string label_map;
  std::string prompt_id;
  std::size_t shots = 0;
};

struct IclSequence {
  std::string prompt;
  std::vector<Block> blocks;
  Block test_block;
  // Surface tokens of demonstration labels, block order.
  std::vector<std::string> demo_labels;
  SequenceMeta meta;

  /// Ordered wire parts; adjacent text is merged and blocks are separated by
  /// a blank line.
  std::vector<Part> parts() const;
};

Block render_block(const Sample& sample, const ModalityComposition& composition,
                   const SentimentScheme& scheme, const LabelMap& label_map, bool include_label);

/// Task prompt for `prompt_id` ("1", "2" or "3") with the category list
/// rendered from the label map surfaces.
std::string render_prompt(std::string_view prompt_id, TaskType task, const LabelMap& label_map,
                          bool with_examples);

class SampleIndex {
 public:
  explicit SampleIndex(const std::vector<Sample>& samples);
  const Sample& at(std::string_view id) const;
  const Sample* find(std::string_view id) const;

 private:
  std::map<std::string, const Sample*, std::less<>> by_id_;
};

IclSequence build_sequence(std::string_view prompt_id, const SelectionResult& selection,
                           const SampleIndex& corpus, const SentimentScheme& scheme,
                           const ModalityComposition& composition, const LabelMap& label_map);

/// Maps a generated answer back to a category; nullopt means unparsed.
std::optional<std::string> parse_prediction(std::string_view generated, const SentimentScheme& scheme,
                                            const LabelMap& label_map);

}  // namespace mmicl
