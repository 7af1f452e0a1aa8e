#include "mmicl/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mmicl/error.hpp"
#include "mmicl/linalg.hpp"

namespace mmicl {

namespace {

constexpr std::string_view kMagic = "ICLEMB01";

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes_[pos_]) |
                                        (static_cast<unsigned char>(bytes_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (!has(n)) throw Error(ErrorCode::Truncated, std::string("unexpected end of file reading ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xffu));
  out.push_back(static_cast<char>((v >> 8) & 0xffu));
}

}  // namespace

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::Image: return "image";
    case Channel::Text: return "text";
    case Channel::Aspect: return "aspect";
    case Channel::Caption: return "caption";
    case Channel::GeneratedImage: return "generated_image";
  }
  return "?";
}

std::optional<Channel> parse_channel(std::string_view name) {
  for (auto c : kAllChannels) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

ChannelStore::ChannelStore(std::string name, std::vector<std::string> ids, RowMatrixXf vectors)
    : name_(std::move(name)), ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows()) {
    throw Error(ErrorCode::InvalidArgument, "id count does not match vector rows");
  }
  norms_.reserve(ids_.size());
  for (Eigen::Index r = 0; r < vectors_.rows(); ++r) {
    const auto& id = ids_[static_cast<std::size_t>(r)];
    if (!vectors_.row(r).allFinite()) throw Error(ErrorCode::NonFinite, "vector '" + id + "' in channel " + name_);
    const double n = mmicl::norm(vectors_.row(r));
    if (!(n > 0.0)) throw Error(ErrorCode::ZeroNorm, "vector '" + id + "' in channel " + name_);
    norms_.push_back(n);
    if (!index_.emplace(id, r).second) throw Error(ErrorCode::DuplicateId, "'" + id + "' in channel " + name_);
  }
}

std::optional<Eigen::Index> ChannelStore::row_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ChannelStore decode_store(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadMagic, "missing ICLEMB01 header");
  }
  Reader r(bytes.substr(kMagic.size()));
  const auto name_len = r.u32("channel name length");
  std::string name(r.take(name_len, "channel name"));
  const auto dim = r.u32("dim");
  const auto count = r.u32("count");
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dim must be positive");

  std::vector<std::string> ids;
  ids.reserve(count);
  RowMatrixXf vectors(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  for (std::uint32_t i = 0; i < count; ++i) {
    if (r.remaining() == 0) {
      throw Error(ErrorCode::Truncated, "header declares " + std::to_string(count) + " records, found " +
                                            std::to_string(i));
    }
    const auto id_len = r.u16("id length");
    ids.emplace_back(r.take(id_len, "id"));
    for (std::uint32_t d = 0; d < dim; ++d) vectors(i, d) = r.f32("vector component");
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::InvalidArgument, std::to_string(r.remaining()) + " trailing bytes after last record");
  }
  return ChannelStore(std::move(name), std::move(ids), std::move(vectors));
}

ChannelStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open store " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_store(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string encode_store(const ChannelStore& store) {
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(store.name().size()));
  out += store.name();
  put_u32(out, static_cast<std::uint32_t>(store.dim()));
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  const auto& m = store.matrix();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& id = store.ids()[i];
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    for (Eigen::Index d = 0; d < m.cols(); ++d) {
      put_u32(out, std::bit_cast<std::uint32_t>(m(static_cast<Eigen::Index>(i), d)));
    }
  }
  return out;
}

void write_store(const std::filesystem::path& path, const ChannelStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write store " + path.string());
  const auto bytes = encode_store(store);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void EmbeddingStore::add(ChannelStore store) {
  auto c = parse_channel(store.name());
  if (!c) throw Error(ErrorCode::ChannelUnavailable, "unknown channel name '" + store.name() + "'");
  add(*c, std::move(store));
}

void EmbeddingStore::add(Channel channel, ChannelStore store) {
  if (channel == Channel::Aspect && task_type_ == TaskType::PostLevel) {
    throw Error(ErrorCode::ChannelUnavailable, "aspect channel on a post-level dataset");
  }
  channels_[channel] = std::move(store);
}

void EmbeddingStore::check_available(Channel c) const {
  if (c == Channel::Aspect && task_type_ == TaskType::PostLevel) {
    throw Error(ErrorCode::ChannelUnavailable, "aspect channel on a post-level dataset");
  }
  if (!channels_.contains(c)) {
    throw Error(ErrorCode::ChannelUnavailable, "channel " + std::string(to_string(c)) + " not loaded");
  }
}

const ChannelStore& EmbeddingStore::channel(Channel c) const {
  check_available(c);
  return channels_.at(c);
}

Eigen::Index EmbeddingStore::require_row(Channel c, std::string_view id) const {
  const auto& ch = channel(c);
  auto r = ch.row_of(id);
  if (!r) {
    throw Error(ErrorCode::MissingEmbedding, "'" + std::string(id) + "' in channel " + std::string(to_string(c)));
  }
  return *r;
}

Eigen::RowVectorXf EmbeddingStore::get_vector(Channel c, std::string_view id) const {
  return channel(c).row(require_row(c, id));
}

std::vector<std::string> EmbeddingStore::missing(Channel c, const std::vector<std::string>& ids) const {
  auto it = channels_.find(c);
  if (it == channels_.end()) return ids;
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (!it->second.row_of(id)) out.push_back(id);
  }
  return out;
}

EmbeddingStore load_store_dir(const std::filesystem::path& dir, TaskType task_type) {
  EmbeddingStore store(task_type);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".emb") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto ch = load_store(f);
    auto tag = parse_channel(ch.name());
    if (!tag) throw Error(ErrorCode::ChannelUnavailable, f.string() + ": unknown channel '" + ch.name() + "'");
    if (store.has(*tag)) throw Error(ErrorCode::DuplicateId, f.string() + ": channel " + ch.name() + " loaded twice");
    store.add(*tag, std::move(ch));
  }
  return store;
}

}  // namespace mmicl
