#include "mmicl/records.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mmicl/error.hpp"

namespace mmicl {

using nlohmann::ordered_json;

namespace {

ordered_json ratio_or_null(const std::optional<double>& v) {
  return v ? ordered_json(report_ratio(*v)) : ordered_json(nullptr);
}

ordered_json block_json(const Block& b) {
  ordered_json j;
  auto media = ordered_json::array();
  for (const auto& m : b.media) media.push_back(m.content);
  j["media"] = std::move(media);
  j["lines"] = b.lines;
  return j;
}

Block block_from(const ordered_json& j) {
  Block b;
  for (const auto& m : j.at("media")) b.media.push_back({Part::Kind::Image, m.get<std::string>()});
  b.lines = j.at("lines").get<std::vector<std::string>>();
  return b;
}

}  // namespace

double round_significant9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

ordered_json to_json(const SelectionResult& s) {
  ordered_json j;
  j["test_id"] = s.test_id;
  j["shots"] = s.shots;
  j["protocol"] = std::string(to_string(s.protocol));
  j["strategy"] = s.strategy;
  j["oracle"] = s.oracle();
  auto demos = ordered_json::array();
  for (const auto& d : s.demos) {
    ordered_json dj;
    dj["id"] = d.id;
    dj["score"] = round_significant9(d.score.value);
    ordered_json comps = ordered_json::object();
    if (d.score.image) comps["image"] = round_significant9(*d.score.image);
    if (d.score.text) comps["text"] = round_significant9(*d.score.text);
    if (d.score.aspect) comps["aspect"] = round_significant9(*d.score.aspect);
    dj["components"] = std::move(comps);
    demos.push_back(std::move(dj));
  }
  j["demos"] = std::move(demos);
  ordered_json alloc = ordered_json::object();
  for (const auto& [cat, n] : s.allocation) alloc[cat] = n;
  j["allocation"] = std::move(alloc);
  j["warnings"] = s.warnings;
  return j;
}

SelectionResult selection_from_json(const ordered_json& j) {
  try {
    SelectionResult s;
    s.test_id = j.at("test_id").get<std::string>();
    s.shots = j.at("shots").get<std::size_t>();
    s.protocol = parse_protocol(j.at("protocol").get<std::string>());
    s.strategy = j.at("strategy").get<std::string>();
    for (const auto& d : j.at("demos")) {
      RankedCandidate c;
      c.id = d.at("id").get<std::string>();
      c.score.value = d.at("score").get<double>();
      if (d.contains("components")) {
        const auto& comps = d["components"];
        if (comps.contains("image")) c.score.image = comps["image"].get<double>();
        if (comps.contains("text")) c.score.text = comps["text"].get<double>();
        if (comps.contains("aspect")) c.score.aspect = comps["aspect"].get<double>();
      }
      s.demos.push_back(std::move(c));
    }
    for (const auto& [cat, n] : j.at("allocation").items()) s.allocation.emplace_back(cat, n.get<std::size_t>());
    s.warnings = j.value("warnings", std::vector<std::string>{});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedLine, std::string("selection record: ") + e.what());
  }
}

ordered_json to_json(const IclSequence& s) {
  ordered_json j;
  j["test_id"] = s.meta.test_id;
  j["strategy"] = s.meta.strategy;
  j["protocol"] = s.meta.protocol;
  j["composition"] = s.meta.composition;
  j["label_map"] = s.meta.label_map;
  j["prompt_id"] = s.meta.prompt_id;
  j["shots"] = s.meta.shots;
  j["demo_labels"] = s.demo_labels;
  j["prompt"] = s.prompt;
  auto blocks = ordered_json::array();
  for (const auto& b : s.blocks) blocks.push_back(block_json(b));
  j["blocks"] = std::move(blocks);
  j["test_block"] = block_json(s.test_block);
  auto parts = ordered_json::array();
  for (const auto& p : s.parts()) {
    ordered_json pj;
    pj["kind"] = p.kind == Part::Kind::Text ? "text" : "image";
    pj["content"] = p.content;
    parts.push_back(std::move(pj));
  }
  j["parts"] = std::move(parts);
  return j;
}

IclSequence sequence_from_json(const ordered_json& j) {
  try {
    IclSequence s;
    s.meta.test_id = j.at("test_id").get<std::string>();
    s.meta.strategy = j.at("strategy").get<std::string>();
    s.meta.protocol = j.at("protocol").get<std::string>();
    s.meta.composition = j.at("composition").get<std::string>();
    s.meta.label_map = j.at("label_map").get<std::string>();
    s.meta.prompt_id = j.at("prompt_id").get<std::string>();
    s.meta.shots = j.at("shots").get<std::size_t>();
    s.demo_labels = j.at("demo_labels").get<std::vector<std::string>>();
    s.prompt = j.at("prompt").get<std::string>();
    for (const auto& b : j.at("blocks")) s.blocks.push_back(block_from(b));
    s.test_block = block_from(j.at("test_block"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedLine, std::string("sequence record: ") + e.what());
  }
}

ordered_json to_json(const Prediction& p) {
  ordered_json j;
  j["test_id"] = p.test_id;
  j["raw_text"] = p.raw_text;
  j["parsed"] = p.parsed ? ordered_json(*p.parsed) : ordered_json(nullptr);
  if (p.error) j["error"] = *p.error;
  return j;
}

Prediction prediction_from_json(const ordered_json& j) {
  try {
    Prediction p;
    p.test_id = j.at("test_id").get<std::string>();
    p.raw_text = j.value("raw_text", std::string());
    if (j.contains("parsed") && !j["parsed"].is_null()) p.parsed = j["parsed"].get<std::string>();
    if (j.contains("error")) p.error = j["error"].get<std::string>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedLine, std::string("prediction record: ") + e.what());
  }
}

ordered_json to_json(const EvaluationReport& r) {
  ordered_json j;
  j["accuracy"] = report_ratio(r.accuracy);
  j["total"] = r.total;
  j["unparsed"] = r.unparsed;
  j["oracle"] = r.oracle;
  ordered_json per_class = ordered_json::object();
  for (const auto& cat : r.confusion.categories) {
    const auto& m = r.per_class.at(cat);
    ordered_json cj;
    cj["precision"] = ratio_or_null(m.precision);
    cj["recall"] = ratio_or_null(m.recall);
    cj["predicted"] = m.predicted;
    cj["support"] = m.support;
    per_class[cat] = std::move(cj);
  }
  j["per_class"] = std::move(per_class);

  ordered_json conf;
  conf["rows"] = r.confusion.categories;
  auto cols = r.confusion.categories;
  cols.push_back("Unparsed");
  conf["columns"] = cols;
  auto counts = ordered_json::array();
  for (Eigen::Index i = 0; i < r.confusion.counts.rows(); ++i) {
    auto row = ordered_json::array();
    for (Eigen::Index k = 0; k < r.confusion.counts.cols(); ++k) row.push_back(r.confusion.counts(i, k));
    counts.push_back(std::move(row));
  }
  conf["counts"] = std::move(counts);
  j["confusion"] = std::move(conf);

  j["slr_overall"] = ratio_or_null(r.slr_overall);
  ordered_json slr_cat = ordered_json::object();
  for (const auto& cat : r.confusion.categories) {
    auto it = r.slr_per_category.find(cat);
    slr_cat[cat] = it == r.slr_per_category.end() ? ordered_json(nullptr) : ratio_or_null(it->second);
  }
  j["slr_per_category"] = std::move(slr_cat);
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : r.config) config[k] = v;
  j["config"] = std::move(config);
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
}

std::vector<ordered_json> read_jsonl(const std::filesystem::path& path) {
  std::vector<ordered_json> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ordered_json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedLine, path.string() + ": line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mmicl
