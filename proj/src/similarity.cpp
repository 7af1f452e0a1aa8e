#include "mmicl/similarity.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "mmicl/error.hpp"
#include "mmicl/linalg.hpp"
#include "text_util.hpp"

namespace mmicl {

namespace {

bool weighted_kind(StrategyKind k) { return k == StrategyKind::WIT || k == StrategyKind::WITA; }

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double parse_number(std::string_view s) {
  s = detail::trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidStrategy, "bad ratio term '" + std::string(s) + "'");
  }
  return v;
}

double channel_cosine(const EmbeddingStore& store, Channel c, const Sample& a, const Sample& b) {
  const auto& ch = store.channel(c);
  const auto ra = store.require_row(c, a.id);
  const auto rb = store.require_row(c, b.id);
  return cosine_from(dot(ch.row(ra), ch.row(rb)), ch.norm(ra), ch.norm(rb));
}

}  // namespace

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Random: return "random";
    case StrategyKind::I: return "i";
    case StrategyKind::T: return "t";
    case StrategyKind::A: return "a";
    case StrategyKind::IT: return "it";
    case StrategyKind::IA: return "ia";
    case StrategyKind::TA: return "ta";
    case StrategyKind::ITA: return "ita";
    case StrategyKind::WIT: return "wit";
    case StrategyKind::WITA: return "wita";
  }
  return "?";
}

StrategyKind parse_strategy_kind(std::string_view s) {
  const auto v = detail::lower(detail::trim(s));
  if (v == "r") return StrategyKind::Random;
  for (auto k : {StrategyKind::Random, StrategyKind::I, StrategyKind::T, StrategyKind::A, StrategyKind::IT,
                 StrategyKind::IA, StrategyKind::TA, StrategyKind::ITA, StrategyKind::WIT, StrategyKind::WITA}) {
    if (to_string(k) == v) return k;
  }
  throw Error(ErrorCode::InvalidStrategy, "unknown strategy '" + std::string(s) + "'");
}

Ratio parse_ratio(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::InvalidStrategy, "ratio must look like a:b");
  Ratio r{parse_number(s.substr(0, colon)), parse_number(s.substr(colon + 1))};
  if (r.first < 0 || r.second < 0) throw Error(ErrorCode::InvalidStrategy, "ratio terms must be non-negative");
  return r;
}

std::string to_string(const Ratio& r) { return fmt_number(r.first) + ":" + fmt_number(r.second); }

Weights resolve_weights(const Ratio& inner, const std::optional<Ratio>& outer) {
  auto check = [](const Ratio& r) {
    if (!(r.first >= 0.0) || !(r.second >= 0.0) || !std::isfinite(r.first) || !std::isfinite(r.second)) {
      throw Error(ErrorCode::InvalidStrategy, "ratio terms must be finite and non-negative");
    }
    if (r.first + r.second <= 0.0) throw Error(ErrorCode::InvalidStrategy, "ratio " + to_string(r) + " is all zero");
  };
  check(inner);
  double mass = 1.0;
  double gamma = 0.0;
  if (outer) {
    check(*outer);
    const double total = outer->first + outer->second;
    mass = outer->first / total;
    gamma = outer->second / total;
  }
  const double inner_total = inner.first + inner.second;
  return Weights{mass * (inner.first / inner_total), mass * (inner.second / inner_total), gamma};
}

SimilarityStrategy::SimilarityStrategy(StrategyKind kind, std::optional<std::uint64_t> seed)
    : kind_(kind), seed_(seed) {
  if (weighted_kind(kind)) {
    throw Error(ErrorCode::InvalidStrategy, std::string(to_string(kind)) + " needs a ratio");
  }
}

SimilarityStrategy::SimilarityStrategy(StrategyKind kind, const Ratio& inner, const std::optional<Ratio>& outer)
    : kind_(kind), inner_(inner), outer_(outer) {
  if (kind == StrategyKind::WIT) {
    if (outer) throw Error(ErrorCode::InvalidStrategy, "wit takes no outer ratio");
  } else if (kind == StrategyKind::WITA) {
    if (!outer) throw Error(ErrorCode::InvalidStrategy, "wita needs an outer (image+text):aspect ratio");
  } else {
    throw Error(ErrorCode::InvalidStrategy, std::string(to_string(kind)) + " takes no ratio");
  }
  weights_ = resolve_weights(inner, outer);
}

SimilarityStrategy SimilarityStrategy::weighted(StrategyKind kind, Weights raw) {
  if (!weighted_kind(kind)) throw Error(ErrorCode::InvalidStrategy, "weights apply to wit/wita only");
  if (raw.image < 0 || raw.text < 0 || raw.aspect < 0) {
    throw Error(ErrorCode::InvalidStrategy, "weights must be non-negative");
  }
  if (kind == StrategyKind::WIT && raw.aspect != 0.0) {
    throw Error(ErrorCode::InvalidStrategy, "wit has no aspect weight");
  }
  const double total = raw.image + raw.text + raw.aspect;
  if (!(total > 0.0) || !std::isfinite(total)) throw Error(ErrorCode::InvalidStrategy, "weights sum to zero");
  SimilarityStrategy s;
  s.kind_ = kind;
  s.weights_ = Weights{raw.image / total, raw.text / total, raw.aspect / total};
  return s;
}

bool SimilarityStrategy::uses(Channel c) const {
  switch (kind_) {
    case StrategyKind::Random: return c == Channel::Image || c == Channel::Text;  // ordering pass
    case StrategyKind::I: return c == Channel::Image;
    case StrategyKind::T: return c == Channel::Text;
    case StrategyKind::A: return c == Channel::Aspect;
    case StrategyKind::IT:
    case StrategyKind::WIT: return c == Channel::Image || c == Channel::Text;
    case StrategyKind::IA: return c == Channel::Image || c == Channel::Aspect;
    case StrategyKind::TA: return c == Channel::Text || c == Channel::Aspect;
    case StrategyKind::ITA:
    case StrategyKind::WITA: return c == Channel::Image || c == Channel::Text || c == Channel::Aspect;
  }
  return false;
}

std::vector<Channel> SimilarityStrategy::channels() const {
  std::vector<Channel> out;
  for (auto c : {Channel::Image, Channel::Text, Channel::Aspect}) {
    if (uses(c)) out.push_back(c);
  }
  return out;
}

void SimilarityStrategy::check_task(TaskType t) const {
  if (t == TaskType::PostLevel && needs_aspect()) {
    throw Error(ErrorCode::InvalidStrategy, "strategy " + label() + " needs aspects; dataset is post-level");
  }
}

std::string SimilarityStrategy::label() const {
  std::string out(to_string(kind_));
  if (inner_) {
    out += "[" + to_string(*inner_);
    if (outer_) out += ";" + to_string(*outer_);
    out += "]";
  } else if (weighted_kind(kind_)) {
    out += "(" + fmt_number(weights_.image) + "," + fmt_number(weights_.text);
    if (kind_ == StrategyKind::WITA) out += "," + fmt_number(weights_.aspect);
    out += ")";
  }
  return out;
}

double combine(const SimilarityStrategy& strategy, double k_image, double k_text, double k_aspect) {
  const auto& w = strategy.weights();
  switch (strategy.kind()) {
    case StrategyKind::I: return k_image;
    case StrategyKind::T: return k_text;
    case StrategyKind::A: return k_aspect;
    case StrategyKind::Random:
    case StrategyKind::IT: return k_image + k_text;
    case StrategyKind::IA: return k_image + k_aspect;
    case StrategyKind::TA: return k_text + k_aspect;
    case StrategyKind::ITA: return k_image + k_text + k_aspect;
    case StrategyKind::WIT: return w.image * k_image + w.text * k_text;
    case StrategyKind::WITA: return w.image * k_image + w.text * k_text + w.aspect * k_aspect;
  }
  return 0.0;
}

SimilarityScore score(const SimilarityStrategy& strategy, const Sample& test, const Sample& candidate,
                      const EmbeddingStore& store) {
  strategy.check_task(store.task_type());
  SimilarityScore s;
  if (strategy.uses(Channel::Image)) s.image = channel_cosine(store, Channel::Image, test, candidate);
  if (strategy.uses(Channel::Text)) s.text = channel_cosine(store, Channel::Text, test, candidate);
  if (strategy.uses(Channel::Aspect)) s.aspect = channel_cosine(store, Channel::Aspect, test, candidate);
  s.value = combine(strategy, s.image.value_or(0.0), s.text.value_or(0.0), s.aspect.value_or(0.0));
  return s;
}

}  // namespace mmicl
