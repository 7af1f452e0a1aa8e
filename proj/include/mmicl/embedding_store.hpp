#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "mmicl/corpus.hpp"

namespace mmicl {

enum class Channel { Image, Text, Aspect, Caption, GeneratedImage };

inline constexpr std::array<Channel, 5> kAllChannels = {
    Channel::Image, Channel::Text, Channel::Aspect, Channel::Caption,
    Channel::GeneratedImage};

std::string_view to_string(Channel c);
std::optional<Channel> parse_channel(std::string_view name);

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<const Eigen::RowVectorXf>;

/// Dense vectors of one modality channel, one row per sample id.
class ChannelStore {
 public:
  ChannelStore() = default;
  ChannelStore(std::string name, std::vector<std::string> ids, RowMatrixXf vectors);

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return vectors_.cols(); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const RowMatrixXf& matrix() const { return vectors_; }

  std::optional<Eigen::Index> row_of(std::string_view id) const;
  auto row(Eigen::Index r) const { return vectors_.row(r); }
  /// Euclidean norm of row `r`, accumulated in double.
  double norm(Eigen::Index r) const { return norms_[static_cast<std::size_t>(r)]; }

 private:
  std::string name_;
  std::vector<std::string> ids_;
  RowMatrixXf vectors_;
  std::vector<double> norms_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

/// Decodes one ICLEMB01 channel file.
///
/// Layout, little-endian: "ICLEMB01", u32 name length, name bytes, u32 dim,
/// u32 count, then `count` records of {u16 id length, id bytes, dim x f32}.
ChannelStore load_store(const std::filesystem::path& path);
ChannelStore decode_store(std::string_view bytes);

std::string encode_store(const ChannelStore& store);
void write_store(const std::filesystem::path& path, const ChannelStore& store);

class EmbeddingStore {
 public:
  explicit EmbeddingStore(TaskType task_type) : task_type_(task_type) {}

  TaskType task_type() const { return task_type_; }

  /// Adds a channel; the channel tag comes from the store name.
  void add(ChannelStore store);
  void add(Channel channel, ChannelStore store);

  bool has(Channel c) const { return channels_.contains(c); }
  const ChannelStore& channel(Channel c) const;

  /// Returns the stored vector for `id` unchanged.
  Eigen::RowVectorXf get_vector(Channel c, std::string_view id) const;
  /// Row index of `id` within channel `c`; throws MissingEmbedding.
  Eigen::Index require_row(Channel c, std::string_view id) const;

  /// Ids from `ids` missing in channel `c` (all ids when the channel is absent).
  std::vector<std::string> missing(Channel c, const std::vector<std::string>& ids) const;

 private:
  void check_available(Channel c) const;

  TaskType task_type_;
  std::map<Channel, ChannelStore> channels_;
};

/// Loads every `*.emb` file in `dir` into a store for `task_type`.
EmbeddingStore load_store_dir(const std::filesystem::path& dir, TaskType task_type);

}  // namespace mmicl
