#include "mmicl/sequencing.hpp"

#include <algorithm>
#include <cctype>

#include "mmicl/error.hpp"
#include "text_util.hpp"

namespace mmicl {

namespace {

constexpr std::string_view kLetters = "ICTG";  // canonical order, indexed by Modality

std::string category_list(const LabelMap& map) {
  std::string out = "[";
  for (std::size_t i = 0; i < map.pairs().size(); ++i) {
    if (i) out += ", ";
    out += map.pairs()[i].second;
  }
  return out + "]";
}

void append_text(std::vector<Part>& parts, std::string_view text) {
  if (text.empty()) return;
  if (!parts.empty() && parts.back().kind == Part::Kind::Text) {
    parts.back().content += text;
  } else {
    parts.push_back({Part::Kind::Text, std::string(text)});
  }
}

void append_block(std::vector<Part>& parts, const Block& block) {
  for (const auto& m : block.media) parts.push_back(m);
  append_text(parts, block.text());
}

}  // namespace

ModalityComposition ModalityComposition::parse(std::string_view code) {
  ModalityComposition c;
  for (const auto& tok : detail::split(code, ',')) {
    if (tok.size() != 1) throw Error(ErrorCode::InvalidArgument, "bad modality '" + tok + "' in '" + std::string(code) + "'");
    const auto pos = kLetters.find(static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0]))));
    if (pos == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "bad modality '" + tok + "' in '" + std::string(code) + "'");
    }
    c.bits_ |= 1u << pos;
  }
  if (c.empty()) throw Error(ErrorCode::InvalidArgument, "empty modality composition");
  return c;
}

ModalityComposition ModalityComposition::of(std::initializer_list<Modality> ms) {
  ModalityComposition c;
  for (auto m : ms) c.bits_ |= 1u << static_cast<unsigned>(m);
  if (c.empty()) throw Error(ErrorCode::InvalidArgument, "empty modality composition");
  return c;
}

std::vector<ModalityComposition> ModalityComposition::all() {
  std::vector<ModalityComposition> out;
  for (const char* code : {"I", "C", "I,C", "T", "G", "T,G", "I,T", "I,G", "C,T", "C,G", "I,C,T", "I,T,G",
                           "C,T,G", "I,C,G", "I,C,T,G"}) {
    out.push_back(parse(code));
  }
  return out;
}

std::string ModalityComposition::code() const {
  std::string out;
  for (unsigned i = 0; i < kLetters.size(); ++i) {
    if ((bits_ >> i) & 1u) {
      if (!out.empty()) out += ',';
      out += kLetters[i];
    }
  }
  return out;
}

LabelMap::LabelMap(std::string id, std::vector<std::pair<std::string, std::string>> pairs)
    : id_(std::move(id)), pairs_(std::move(pairs)) {
  std::vector<std::string> surfaces;
  for (const auto& [cat, tok] : pairs_) {
    if (detail::trim(tok).empty() || detail::trim(tok) != tok) {
      throw Error(ErrorCode::InvalidArgument, "surface token for " + cat + " must be non-empty and trimmed");
    }
    surfaces.push_back(tok);
  }
  std::string offender;
  if (!detail::prefix_free(surfaces, &offender)) {
    throw Error(ErrorCode::InvalidArgument, "label map tokens are not unique and prefix-free: " + offender);
  }
}

LabelMap LabelMap::identity(const SentimentScheme& scheme) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& c : scheme.categories()) pairs.emplace_back(c, c);
  return LabelMap("identity", std::move(pairs));
}

LabelMap LabelMap::animals(const SentimentScheme& scheme) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& c : scheme.categories()) {
    const auto l = detail::lower(c);
    pairs.emplace_back(c, l == "positive" ? "dog" : l == "neutral" ? "cat" : l == "negative" ? "bird" : c);
  }
  return LabelMap("animals", std::move(pairs));
}

LabelMap LabelMap::parse(std::string_view spec, const SentimentScheme& scheme) {
  const auto s = detail::trim(spec);
  if (s.empty() || s == "identity") return identity(scheme);
  if (s == "animals") return animals(scheme);
  std::map<std::string, std::string> given;
  for (const auto& item : detail::split(s, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "label map entry '" + item + "' lacks '='");
    const auto cat = std::string(detail::trim(std::string_view(item).substr(0, eq)));
    if (!scheme.contains(cat)) throw Error(ErrorCode::UnknownLabel, "label map names '" + cat + "'");
    given[cat] = std::string(detail::trim(std::string_view(item).substr(eq + 1)));
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& c : scheme.categories()) {
    auto it = given.find(c);
    if (it == given.end()) throw Error(ErrorCode::InvalidArgument, "label map misses category " + c);
    pairs.emplace_back(c, it->second);
  }
  return LabelMap(std::string(s), std::move(pairs));
}

const std::string& LabelMap::surface(std::string_view category) const {
  for (const auto& [cat, tok] : pairs_) {
    if (cat == category) return tok;
  }
  throw Error(ErrorCode::UnknownLabel, "label map has no entry for '" + std::string(category) + "'");
}

std::optional<std::string> LabelMap::category_of(std::string_view token) const {
  for (const auto& [cat, tok] : pairs_) {
    if (detail::lower(tok) == detail::lower(token)) return cat;
  }
  return std::nullopt;
}

std::string Block::text() const {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

std::vector<Part> Block::parts() const {
  std::vector<Part> out = media;
  out.push_back({Part::Kind::Text, text()});
  return out;
}

std::vector<Part> IclSequence::parts() const {
  std::vector<Part> out;
  append_text(out, prompt);
  for (const auto& b : blocks) {
    append_text(out, "\n\n");
    append_block(out, b);
  }
  append_text(out, "\n\n");
  append_block(out, test_block);
  return out;
}

Block render_block(const Sample& sample, const ModalityComposition& composition, const SentimentScheme& scheme,
                   const LabelMap& label_map, bool include_label) {
  auto missing = [&](std::string_view what) {
    return Error(ErrorCode::MissingAsset, std::string(what) + " of '" + sample.id + "'");
  };
  Block b;
  if (composition.has(Modality::Image)) b.media.push_back({Part::Kind::Image, sample.image_ref});
  if (composition.has(Modality::GeneratedImage)) {
    if (!sample.gen_image_ref) throw missing("generated_image");
    b.media.push_back({Part::Kind::Image, *sample.gen_image_ref});
  }
  if (composition.has(Modality::Text)) b.lines.push_back("Text: " + sample.text);
  if (composition.has(Modality::Caption)) {
    if (!sample.caption) throw missing("caption");
    b.lines.push_back("Caption: " + *sample.caption);
  }
  if (scheme.task_type() == TaskType::AspectLevel) {
    if (!sample.aspect) throw missing("aspect");
    b.lines.push_back("Aspect: " + *sample.aspect);
  }
  b.lines.push_back(include_label ? "Sentiment: " + label_map.surface(sample.label) : std::string("Sentiment:"));
  return b;
}

std::string render_prompt(std::string_view prompt_id, TaskType task, const LabelMap& label_map, bool with_examples) {
  const auto cats = category_list(label_map);
  std::string p;
  const bool post = task == TaskType::PostLevel;
  if (prompt_id == "1") {
    p = post ? "A post contains an image and a text. Classify the sentiment of the post into " + cats + "."
             : "A post contains an image, a text and an aspect. Identify the sentiment of the aspect in the post. "
               "The optional categories are " + cats + ".";
  } else if (prompt_id == "2") {
    p = post ? "Please classify the sentiment of the image-text post into " + cats + "."
             : "Please classify the sentiment of the aspect in image-text post into " + cats + ".";
  } else if (prompt_id == "3") {
    p = post ? "Here is a post containing an image and a text. The optional categories are " + cats +
                   ". What is the overall sentiment of the post?"
             : "Here is a post containing an image, a text and an aspect. The optional categories are " + cats +
                   ". What is the sentiment of the aspect in the post?";
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown prompt id '" + std::string(prompt_id) + "'");
  }
  if (with_examples) p += " Here are some examples";
  return p;
}

SampleIndex::SampleIndex(const std::vector<Sample>& samples) {
  for (const auto& s : samples) by_id_.emplace(s.id, &s);
}

const Sample* SampleIndex::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : it->second;
}

const Sample& SampleIndex::at(std::string_view id) const {
  if (const auto* s = find(id)) return *s;
  throw Error(ErrorCode::InvalidArgument, "sample '" + std::string(id) + "' not in corpus");
}

IclSequence build_sequence(std::string_view prompt_id, const SelectionResult& selection, const SampleIndex& corpus,
                           const SentimentScheme& scheme, const ModalityComposition& composition,
                           const LabelMap& label_map) {
  IclSequence seq;
  seq.prompt = render_prompt(prompt_id, scheme.task_type(), label_map, !selection.demos.empty());
  for (const auto& d : selection.demos) {
    const auto& s = corpus.at(d.id);
    seq.blocks.push_back(render_block(s, composition, scheme, label_map, true));
    seq.demo_labels.push_back(label_map.surface(s.label));
  }
  seq.test_block = render_block(corpus.at(selection.test_id), composition, scheme, label_map, false);
  seq.meta = SequenceMeta{selection.test_id,         selection.strategy, std::string(to_string(selection.protocol)),
                          composition.code(),        label_map.id(),     std::string(prompt_id),
                          selection.shots};
  return seq;
}

std::optional<std::string> parse_prediction(std::string_view generated, const SentimentScheme& scheme,
                                            const LabelMap& label_map) {
  auto noise = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
  while (!generated.empty() && noise(static_cast<unsigned char>(generated.front()))) generated.remove_prefix(1);
  while (!generated.empty() && noise(static_cast<unsigned char>(generated.back()))) generated.remove_suffix(1);
  if (generated.empty()) return std::nullopt;

  const std::pair<std::string, std::string>* best = nullptr;
  for (const auto& entry : label_map.pairs()) {
    if (detail::istarts_with(generated, entry.second) && (!best || entry.second.size() > best->second.size())) {
      best = &entry;
    }
  }
  if (!best || !scheme.contains(best->first)) return std::nullopt;
  return best->first;
}

}  // namespace mmicl
