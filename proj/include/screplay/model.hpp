#pragma once

#include "screplay/autodiff.hpp"
#include "screplay/batch.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace screplay {

enum class ProjKind { mlp, linear, none };

std::string to_string(ProjKind kind);
ProjKind parse_proj_kind(const std::string& text);

struct ModelConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::size_t embed_dim = 32;
  std::size_t proj_hidden = 32;
  std::size_t proj_dim = 128;
  ProjKind proj_kind = ProjKind::mlp;
  /// Classes housed by the head at construction (labels 0..head_classes-1).
  std::size_t head_classes = 0;

  /// Throws ConfigError on zero extents or proj_kind=none with proj_dim != embed_dim.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct Linear {
  Tensor<T> weight; // [out x in]
  Tensor<T> bias;   // [out]
};

/// Encoder, projection head and expandable softmax head.
///
/// The head is absent until the first class is housed; row k of the head
/// weight scores class head_classes()[k].
template <typename T>
class BasicModel {
public:
  BasicModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t step() const noexcept { return step_; }
  void advance_step() noexcept { ++step_; }
  void set_step(std::uint64_t step) noexcept { step_ = step; }

  std::vector<Linear<T>>& encoder() noexcept { return encoder_; }
  const std::vector<Linear<T>>& encoder() const noexcept { return encoder_; }
  std::vector<Linear<T>>& projection() noexcept { return projection_; }
  const std::vector<Linear<T>>& projection() const noexcept { return projection_; }

  bool has_head() const noexcept { return head_.has_value(); }
  Linear<T>& head();
  const Linear<T>& head() const;
  const std::vector<int>& head_classes() const noexcept { return head_classes_; }
  std::size_t num_head_classes() const noexcept { return head_classes_.size(); }
  /// Head row of a class label, if housed.
  std::optional<std::size_t> head_row(int label) const;

  /// Adds zero-initialized head rows for `new_classes` (appended in ascending
  /// label order). Existing rows are untouched. Throws ContractError if a class
  /// is already housed or listed twice.
  void expand_head(std::span<const int> new_classes);

  /// Replaces the head wholesale (checkpoint restore).
  void restore_head(std::optional<Linear<T>> head, std::vector<int> classes);

  std::vector<Tensor<T>*> encoder_params();
  std::vector<Tensor<T>*> projection_params();
  std::vector<Tensor<T>*> head_params();
  /// Every parameter in declaration order: encoder, projection, head.
  std::vector<Tensor<T>*> all_params();
  std::vector<const Tensor<T>*> all_params() const;

  /// Copy in another precision (used to gradient-check the float model in 64-bit).
  template <typename U>
  BasicModel<U> cast() const;

private:
  template <typename U>
  friend class BasicModel;

  ModelConfig config_;
  std::uint64_t seed_ = 0;
  std::uint64_t step_ = 0;
  std::vector<Linear<T>> encoder_;
  std::vector<Linear<T>> projection_;
  std::optional<Linear<T>> head_;
  std::vector<int> head_classes_;
};

using ModelState = BasicModel<float>;

/// Converts a batch to an input tensor of the model precision.
template <typename T>
Tensor<T> batch_tensor(const Batch& batch);

/// r = l2_normalize(Enc(x)); rows lie on the unit sphere. Non-const models
/// bind parameters as trainable leaves; const models bind them as constants.
template <typename T>
Var<T> encode(Graph<T>& g, BasicModel<T>& model, Var<T> x);
template <typename T>
Var<T> encode(Graph<T>& g, const BasicModel<T>& model, Var<T> x);
template <typename T>
Var<T> encode(Graph<T>& g, BasicModel<T>& model, const Batch& batch);
template <typename T>
Var<T> encode(Graph<T>& g, const BasicModel<T>& model, const Batch& batch);

/// z = l2_normalize(Proj(r)); the identity when proj_kind is none.
template <typename T>
Var<T> project(Graph<T>& g, BasicModel<T>& model, Var<T> r);
template <typename T>
Var<T> project(Graph<T>& g, const BasicModel<T>& model, Var<T> r);

/// r * W^T + b over the housed classes. Throws NoClassesError without a head.
template <typename T>
Var<T> logits(Graph<T>& g, BasicModel<T>& model, Var<T> r);
template <typename T>
Var<T> logits(Graph<T>& g, const BasicModel<T>& model, Var<T> r);

/// Encoder embeddings of every row, row-major n x embed_dim.
std::vector<float> embed_batch(const ModelState& model, const Batch& batch);

/// CLMS1 checkpoint: magic, config block, then parameters in declaration order
/// as little-endian 32-bit reals.
void write_checkpoint(std::ostream& os, const ModelState& model);
ModelState read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const ModelState& model);
ModelState load_checkpoint(const std::filesystem::path& path);

extern template class BasicModel<float>;
extern template class BasicModel<double>;

} // namespace screplay
