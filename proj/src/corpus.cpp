#include "mmicl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mmicl/error.hpp"
#include "text_util.hpp"

namespace mmicl {

namespace {

const std::set<std::string> kKnownFields = {"id",      "split",   "text",     "image",
                                            "label",   "aspect",  "caption",  "gen_image"};

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::MalformedLine, line_error(line, std::string("field '") + key + "' is not a string"));
  }
  return it->get<std::string>();
}

std::string required_string(const nlohmann::json& j, const char* key, std::size_t line) {
  auto v = optional_string(j, key, line);
  if (!v) throw Error(ErrorCode::MalformedLine, line_error(line, std::string("missing field '") + key + "'"));
  return *v;
}

}  // namespace

std::string_view to_string(TaskType t) {
  return t == TaskType::PostLevel ? "post" : "aspect";
}

TaskType parse_task_type(std::string_view s) {
  const auto v = detail::lower(detail::trim(s));
  if (v == "post" || v == "postlevel" || v == "post-level") return TaskType::PostLevel;
  if (v == "aspect" || v == "aspectlevel" || v == "aspect-level") return TaskType::AspectLevel;
  throw Error(ErrorCode::Config, "unknown task type '" + std::string(s) + "'");
}

SentimentScheme::SentimentScheme(std::string name, std::vector<std::string> categories, TaskType task_type)
    : name_(std::move(name)), categories_(std::move(categories)), task_type_(task_type) {
  if (categories_.empty()) throw Error(ErrorCode::InvalidScheme, "no categories");
  for (const auto& c : categories_) {
    if (c.empty()) throw Error(ErrorCode::InvalidScheme, "empty category name");
  }
  std::string offender;
  if (!detail::prefix_free(categories_, &offender)) {
    throw Error(ErrorCode::InvalidScheme, "categories are not unique and prefix-free: " + offender);
  }
}

bool SentimentScheme::contains(std::string_view category) const {
  return std::find(categories_.begin(), categories_.end(), category) != categories_.end();
}

std::size_t SentimentScheme::index_of(std::string_view category) const {
  auto it = std::find(categories_.begin(), categories_.end(), category);
  if (it == categories_.end()) throw Error(ErrorCode::UnknownLabel, std::string(category));
  return static_cast<std::size_t>(it - categories_.begin());
}

SentimentScheme three_class_scheme(TaskType t, std::string name) {
  return SentimentScheme(std::move(name), {"Positive", "Neutral", "Negative"}, t);
}

std::vector<Sample> parse_manifest(std::string_view content, const SentimentScheme& scheme,
                                   std::vector<std::string>* warnings) {
  std::vector<Sample> samples;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) {
      if (end == content.size()) break;
      continue;
    }

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedLine, line_error(line_no, e.what()));
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedLine, line_error(line_no, "record is not an object"));

    Sample s;
    s.id = required_string(j, "id", line_no);
    const auto split = detail::lower(required_string(j, "split", line_no));
    if (split == "train") {
      s.split = Split::Support;
    } else if (split == "test") {
      s.split = Split::Test;
    } else {
      throw Error(ErrorCode::MalformedLine, line_error(line_no, "split must be train or test, got '" + split + "'"));
    }
    s.text = required_string(j, "text", line_no);
    s.image_ref = required_string(j, "image", line_no);
    s.label = required_string(j, "label", line_no);
    s.aspect = optional_string(j, "aspect", line_no);
    s.caption = optional_string(j, "caption", line_no);
    s.gen_image_ref = optional_string(j, "gen_image", line_no);

    if (!scheme.contains(s.label)) {
      throw Error(ErrorCode::UnknownLabel, line_error(line_no, "'" + s.label + "' is not in scheme " + scheme.name()));
    }
    if (!seen.insert(s.id).second) {
      throw Error(ErrorCode::DuplicateId, line_error(line_no, "'" + s.id + "'"));
    }
    if (scheme.task_type() == TaskType::AspectLevel && !s.aspect) {
      throw Error(ErrorCode::MissingAspect, line_error(line_no, "'" + s.id + "'"));
    }
    if (scheme.task_type() == TaskType::PostLevel && s.aspect) {
      throw Error(ErrorCode::UnexpectedAspect, line_error(line_no, "'" + s.id + "' on a post-level scheme"));
    }
    if (warnings) {
      for (const auto& [key, _] : j.items()) {
        if (!kKnownFields.contains(key)) {
          warnings->push_back(line_error(line_no, "unknown field '" + key + "' ignored"));
        }
      }
    }
    samples.push_back(std::move(s));
    if (end == content.size()) break;
  }
  return samples;
}

std::vector<Sample> load_manifest(const std::filesystem::path& path, const SentimentScheme& scheme,
                                  std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), scheme, warnings);
}

std::string serialize_manifest(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["split"] = s.split == Split::Support ? "train" : "test";
    j["text"] = s.text;
    j["image"] = s.image_ref;
    j["label"] = s.label;
    if (s.aspect) j["aspect"] = *s.aspect;
    if (s.caption) j["caption"] = *s.caption;
    if (s.gen_image_ref) j["gen_image"] = *s.gen_image_ref;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void check_asset_paths(const std::vector<Sample>& samples, const std::filesystem::path& root) {
  for (const auto& s : samples) {
    if (!std::filesystem::exists(root / s.image_ref)) {
      throw Error(ErrorCode::MissingAsset, "image of '" + s.id + "' not found: " + s.image_ref);
    }
    if (s.gen_image_ref && !std::filesystem::exists(root / *s.gen_image_ref)) {
      throw Error(ErrorCode::MissingAsset, "generated image of '" + s.id + "' not found: " + *s.gen_image_ref);
    }
  }
}

std::vector<Sample> support_of(const std::vector<Sample>& samples) {
  std::vector<Sample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [](const Sample& s) { return s.split == Split::Support; });
  return out;
}

std::vector<Sample> test_of(const std::vector<Sample>& samples) {
  std::vector<Sample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [](const Sample& s) { return s.split == Split::Test; });
  return out;
}

std::map<std::string, std::size_t> count_by_label(const std::vector<Sample>& samples) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : samples) ++counts[s.label];
  return counts;
}

std::vector<Sample> sample_support_subset(const std::vector<Sample>& samples, const SentimentScheme& scheme,
                                          double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fraction must lie in (0, 1]");
  }
  auto support = support_of(samples);
  if (support.empty()) throw Error(ErrorCode::EmptySupport, "no support samples to subsample");
  std::sort(support.begin(), support.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });

  const std::size_t n = support.size();
  // Guard against 0.1 * 200 landing a hair above 20.
  const auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  if (target < 1) throw Error(ErrorCode::InvalidArgument, "fraction selects no sample");
  if (target >= n) return support;

  const std::size_t c = scheme.size();
  std::vector<std::vector<const Sample*>> pools(c);
  for (const auto& s : support) pools[scheme.index_of(s.label)].push_back(&s);

  std::vector<std::size_t> sizes(c);
  for (std::size_t i = 0; i < c; ++i) sizes[i] = pools[i].size();

  // Largest remainder on target * n_c / n, computed exactly in integers.
  std::vector<std::size_t> take(c);
  std::vector<std::size_t> rem(c);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < c; ++i) {
    take[i] = target * sizes[i] / n;
    rem[i] = target * sizes[i] % n;
    assigned += take[i];
  }
  std::vector<std::size_t> order(c);
  for (std::size_t i = 0; i < c; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t r = 0; assigned < target; ++r) {
    ++take[order[r % c]];
    ++assigned;
  }

  // Every non-empty category keeps at least one member, taken from the
  // category holding the most surplus over its exact quota.
  for (std::size_t i = 0; i < c; ++i) {
    if (sizes[i] == 0 || take[i] > 0) continue;
    std::optional<std::size_t> donor;
    double best = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (take[j] <= 1) continue;
      const double surplus = static_cast<double>(take[j]) -
                             static_cast<double>(target) * static_cast<double>(sizes[j]) / static_cast<double>(n);
      if (!donor || surplus > best) {
        donor = j;
        best = surplus;
      }
    }
    if (!donor) break;
    --take[*donor];
    ++take[i];
  }

  std::mt19937_64 rng(seed);
  std::vector<Sample> out;
  out.reserve(target);
  for (std::size_t i = 0; i < c; ++i) {
    auto pool = pools[i];
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t k = 0; k < take[i]; ++k) out.push_back(*pool[k]);
  }
  std::sort(out.begin(), out.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  return out;
}

DatasetConfig load_dataset_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open dataset config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Config, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    kv[detail::lower(detail::trim(t.substr(0, eq)))] = std::string(detail::trim(t.substr(eq + 1)));
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) {
      throw Error(ErrorCode::Config, path.string() + ": missing key '" + key + "'");
    }
    return it->second;
  };

  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  SentimentScheme scheme(kv.contains("name") ? kv["name"] : path.stem().string(),
                         detail::split(need("categories"), ','), parse_task_type(need("task_type")));
  DatasetConfig config{std::move(scheme), resolve(need("manifest")), resolve(need("embeddings")), std::nullopt};
  if (kv.contains("preset") && !kv["preset"].empty()) config.preset = kv["preset"];

  if (!std::filesystem::exists(config.manifest_path)) {
    throw Error(ErrorCode::Config, "manifest not found: " + config.manifest_path.string());
  }
  if (!std::filesystem::is_directory(config.embedding_dir)) {
    throw Error(ErrorCode::Config, "embedding directory not found: " + config.embedding_dir.string());
  }
  return config;
}

}  // namespace mmicl
