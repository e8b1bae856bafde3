#include "screplay/model.hpp"

#include "screplay/binary_io.hpp"
#include "screplay/error.hpp"
#include "screplay/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace screplay {

std::string to_string(ProjKind kind) {
  switch (kind) {
    case ProjKind::mlp: return "mlp";
    case ProjKind::linear: return "linear";
    case ProjKind::none: return "none";
  }
  return "?";
}

ProjKind parse_proj_kind(const std::string& text) {
  if (text == "mlp") return ProjKind::mlp;
  if (text == "linear") return ProjKind::linear;
  if (text == "none") return ProjKind::none;
  throw ConfigError("unknown proj_kind '" + text + "' (expected mlp, linear or none)");
}

void ModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (proj_dim == 0) throw ConfigError("proj_dim must be positive");
  if (proj_hidden == 0) throw ConfigError("proj_hidden must be positive");
  for (auto h : encoder_hidden) {
    if (h == 0) throw ConfigError("encoder_hidden entries must be positive");
  }
  if (proj_kind == ProjKind::none && proj_dim != embed_dim) {
    throw ConfigError("proj_kind=none requires proj_dim == embed_dim (" +
                      std::to_string(proj_dim) + " vs " + std::to_string(embed_dim) + ")");
  }
}

namespace {

template <typename T>
Linear<T> init_linear(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  auto draw = [&] { return static_cast<T>((2.0 * uniform_unit(rng) - 1.0) * bound); };
  std::vector<T> w(out * in), b(out);
  for (auto& v : w) v = draw();
  for (auto& v : b) v = draw();
  return {Tensor<T>(Shape{out, in}, std::move(w), true), Tensor<T>(Shape{out}, std::move(b), true)};
}

template <typename T>
Linear<T> zero_linear(std::size_t in, std::size_t out) {
  return {Tensor<T>(Shape{out, in}, true), Tensor<T>(Shape{out}, true)};
}

} // namespace

template <typename T>
BasicModel<T>::BasicModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
  auto rng = make_rng(seed, "model-init");
  std::size_t in = config_.input_dim;
  for (auto h : config_.encoder_hidden) {
    encoder_.push_back(init_linear<T>(in, h, rng));
    in = h;
  }
  encoder_.push_back(init_linear<T>(in, config_.embed_dim, rng));

  switch (config_.proj_kind) {
    case ProjKind::mlp:
      projection_.push_back(init_linear<T>(config_.embed_dim, config_.proj_hidden, rng));
      projection_.push_back(init_linear<T>(config_.proj_hidden, config_.proj_dim, rng));
      break;
    case ProjKind::linear:
      projection_.push_back(init_linear<T>(config_.embed_dim, config_.proj_dim, rng));
      break;
    case ProjKind::none:
      break;
  }

  if (config_.head_classes > 0) {
    std::vector<int> initial(config_.head_classes);
    for (std::size_t c = 0; c < initial.size(); ++c) initial[c] = static_cast<int>(c);
    expand_head(initial);
  }
}

template <typename T>
Linear<T>& BasicModel<T>::head() {
  if (!head_) throw NoClassesError("model has no classification head yet");
  return *head_;
}

template <typename T>
const Linear<T>& BasicModel<T>::head() const {
  if (!head_) throw NoClassesError("model has no classification head yet");
  return *head_;
}

template <typename T>
std::optional<std::size_t> BasicModel<T>::head_row(int label) const {
  auto it = std::find(head_classes_.begin(), head_classes_.end(), label);
  if (it == head_classes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - head_classes_.begin());
}

template <typename T>
void BasicModel<T>::expand_head(std::span<const int> new_classes) {
  if (new_classes.empty()) return;
  std::set<int> incoming;
  for (int c : new_classes) {
    if (!incoming.insert(c).second) {
      throw ContractError("class " + std::to_string(c) + " listed twice in head expansion");
    }
    if (head_row(c)) {
      throw ContractError("class " + std::to_string(c) + " is already housed by the head");
    }
  }
  const std::size_t dim = config_.embed_dim;
  const std::size_t old_rows = head_classes_.size();
  const std::size_t rows = old_rows + incoming.size();
  std::vector<T> w(rows * dim, T{0});
  std::vector<T> b(rows, T{0});
  if (head_) {
    std::copy(head_->weight.values().begin(), head_->weight.values().end(), w.begin());
    std::copy(head_->bias.values().begin(), head_->bias.values().end(), b.begin());
  }
  head_ = Linear<T>{Tensor<T>(Shape{rows, dim}, std::move(w), true),
                    Tensor<T>(Shape{rows}, std::move(b), true)};
  head_classes_.insert(head_classes_.end(), incoming.begin(), incoming.end());
}

template <typename T>
void BasicModel<T>::restore_head(std::optional<Linear<T>> head, std::vector<int> classes) {
  const std::size_t rows = head ? head->weight.rows() : 0;
  if (rows != classes.size()) throw FormatError("head rows do not match class list");
  head_ = std::move(head);
  head_classes_ = std::move(classes);
}

template <typename T>
std::vector<Tensor<T>*> BasicModel<T>::encoder_params() {
  std::vector<Tensor<T>*> out;
  for (auto& l : encoder_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>*> BasicModel<T>::projection_params() {
  std::vector<Tensor<T>*> out;
  for (auto& l : projection_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>*> BasicModel<T>::head_params() {
  if (!head_) return {};
  return {&head_->weight, &head_->bias};
}

template <typename T>
std::vector<Tensor<T>*> BasicModel<T>::all_params() {
  auto out = encoder_params();
  for (auto* p : projection_params()) out.push_back(p);
  for (auto* p : head_params()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> BasicModel<T>::all_params() const {
  auto params = const_cast<BasicModel*>(this)->all_params();
  return {params.begin(), params.end()};
}

template <typename T>
template <typename U>
BasicModel<U> BasicModel<T>::cast() const {
  BasicModel<U> out(config_, seed_);
  auto convert = [](const Linear<T>& l) {
    return Linear<U>{l.weight.template cast<U>(), l.bias.template cast<U>()};
  };
  out.encoder_.clear();
  for (const auto& l : encoder_) out.encoder_.push_back(convert(l));
  out.projection_.clear();
  for (const auto& l : projection_) out.projection_.push_back(convert(l));
  out.head_.reset();
  if (head_) out.head_ = convert(*head_);
  out.head_classes_ = head_classes_;
  out.step_ = step_;
  return out;
}

template class BasicModel<float>;
template class BasicModel<double>;
template BasicModel<double> BasicModel<float>::cast<double>() const;
template BasicModel<float> BasicModel<double>::cast<float>() const;

template <typename T>
Tensor<T> batch_tensor(const Batch& batch) {
  if (batch.empty()) throw EmptyBatchError("cannot build an input tensor from an empty batch");
  std::vector<T> values(batch.features().begin(), batch.features().end());
  return Tensor<T>(Shape{batch.size(), batch.dim()}, std::move(values));
}

namespace {

// Parameters enter the graph as trainable leaves or as constant copies.
template <typename T>
Var<T> bind(Graph<T>& g, Tensor<T>& t) {
  return g.param(t);
}

template <typename T>
Var<T> bind(Graph<T>& g, const Tensor<T>& t) {
  return g.input(t);
}

template <typename T, typename Model>
Var<T> encode_impl(Graph<T>& g, Model& model, Var<T> x) {
  const auto& shape = g.shape(x);
  const std::size_t cols = shape.empty() ? 1 : shape.back();
  if (cols != model.config().input_dim) {
    throw ConfigError("input dim " + std::to_string(cols) + " does not match model input_dim " +
                      std::to_string(model.config().input_dim));
  }
  auto& layers = model.encoder();
  Var<T> h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = linear(h, bind(g, layers[i].weight), bind(g, layers[i].bias));
    if (i + 1 < layers.size()) h = relu(h);
  }
  return l2_normalize(h);
}

template <typename T, typename Model>
Var<T> project_impl(Graph<T>& g, Model& model, Var<T> r) {
  const auto& shape = g.shape(r);
  const std::size_t cols = shape.empty() ? 1 : shape.back();
  if (cols != model.config().embed_dim) {
    throw ConfigError("projection input dim " + std::to_string(cols) + " does not match embed_dim " +
                      std::to_string(model.config().embed_dim));
  }
  auto& layers = model.projection();
  if (layers.empty()) return r;
  Var<T> h = r;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = linear(h, bind(g, layers[i].weight), bind(g, layers[i].bias));
    if (i + 1 < layers.size()) h = relu(h);
  }
  return l2_normalize(h);
}

template <typename T, typename Model>
Var<T> logits_impl(Graph<T>& g, Model& model, Var<T> r) {
  if (!model.has_head() || model.num_head_classes() == 0) {
    throw NoClassesError("logits requested before any class was housed");
  }
  const auto& shape = g.shape(r);
  const std::size_t cols = shape.empty() ? 1 : shape.back();
  if (cols != model.config().embed_dim) {
    throw ConfigError("head input dim " + std::to_string(cols) + " does not match embed_dim " +
                      std::to_string(model.config().embed_dim));
  }
  auto& head = model.head();
  return linear(r, bind(g, head.weight), bind(g, head.bias));
}

} // namespace

template <typename T>
Var<T> encode(Graph<T>& g, BasicModel<T>& model, Var<T> x) {
  return encode_impl(g, model, x);
}
template <typename T>
Var<T> encode(Graph<T>& g, const BasicModel<T>& model, Var<T> x) {
  return encode_impl(g, model, x);
}
template <typename T>
Var<T> encode(Graph<T>& g, BasicModel<T>& model, const Batch& batch) {
  return encode_impl(g, model, g.input(batch_tensor<T>(batch)));
}
template <typename T>
Var<T> encode(Graph<T>& g, const BasicModel<T>& model, const Batch& batch) {
  return encode_impl(g, model, g.input(batch_tensor<T>(batch)));
}
template <typename T>
Var<T> project(Graph<T>& g, BasicModel<T>& model, Var<T> r) {
  return project_impl(g, model, r);
}
template <typename T>
Var<T> project(Graph<T>& g, const BasicModel<T>& model, Var<T> r) {
  return project_impl(g, model, r);
}
template <typename T>
Var<T> logits(Graph<T>& g, BasicModel<T>& model, Var<T> r) {
  return logits_impl(g, model, r);
}
template <typename T>
Var<T> logits(Graph<T>& g, const BasicModel<T>& model, Var<T> r) {
  return logits_impl(g, model, r);
}

#define SCREPLAY_INSTANTIATE_MODEL_OPS(T)                                               \
  template Tensor<T> batch_tensor<T>(const Batch&);                                     \
  template Var<T> encode(Graph<T>&, BasicModel<T>&, Var<T>);                            \
  template Var<T> encode(Graph<T>&, const BasicModel<T>&, Var<T>);                      \
  template Var<T> encode(Graph<T>&, BasicModel<T>&, const Batch&);                      \
  template Var<T> encode(Graph<T>&, const BasicModel<T>&, const Batch&);                \
  template Var<T> project(Graph<T>&, BasicModel<T>&, Var<T>);                           \
  template Var<T> project(Graph<T>&, const BasicModel<T>&, Var<T>);                     \
  template Var<T> logits(Graph<T>&, BasicModel<T>&, Var<T>);                            \
  template Var<T> logits(Graph<T>&, const BasicModel<T>&, Var<T>);

SCREPLAY_INSTANTIATE_MODEL_OPS(float)
SCREPLAY_INSTANTIATE_MODEL_OPS(double)

#undef SCREPLAY_INSTANTIATE_MODEL_OPS

std::vector<float> embed_batch(const ModelState& model, const Batch& batch) {
  if (batch.empty()) return {};
  Graph<float> g;
  auto r = encode(g, model, batch);
  auto values = g.value(r);
  return {values.begin(), values.end()};
}

namespace {

constexpr const char* kCheckpointMagic = "CLMS1";

void write_tensor(std::ostream& os, const Tensor<float>& t) {
  for (float v : t.data()) binio::write_f32(os, v);
}

void read_tensor(std::istream& is, Tensor<float>& t) {
  for (float& v : t.data()) v = binio::read_f32(is);
}

} // namespace

void write_checkpoint(std::ostream& os, const ModelState& model) {
  const auto& cfg = model.config();
  os.write(kCheckpointMagic, 5);
  binio::write_u32(os, static_cast<std::uint32_t>(cfg.input_dim));
  binio::write_u32(os, static_cast<std::uint32_t>(cfg.encoder_hidden.size()));
  for (auto h : cfg.encoder_hidden) binio::write_u32(os, static_cast<std::uint32_t>(h));
  binio::write_u32(os, static_cast<std::uint32_t>(cfg.embed_dim));
  binio::write_u32(os, static_cast<std::uint32_t>(cfg.proj_hidden));
  binio::write_u32(os, static_cast<std::uint32_t>(cfg.proj_dim));
  binio::write_u32(os, static_cast<std::uint32_t>(cfg.proj_kind));
  binio::write_u32(os, static_cast<std::uint32_t>(cfg.head_classes));
  binio::write_u64(os, model.seed());
  binio::write_u64(os, model.step());
  binio::write_u32(os, static_cast<std::uint32_t>(model.num_head_classes()));
  for (int c : model.head_classes()) binio::write_i32(os, c);
  for (const auto* p : model.all_params()) write_tensor(os, *p);
  if (!os) throw FormatError("failed writing checkpoint");
}

ModelState read_checkpoint(std::istream& is) {
  binio::expect_magic(is, kCheckpointMagic);
  ModelConfig cfg;
  cfg.input_dim = binio::read_u32(is);
  const auto n_hidden = binio::read_u32(is);
  if (n_hidden > 1024) throw FormatError("implausible encoder depth in checkpoint");
  cfg.encoder_hidden.assign(n_hidden, 0);
  for (auto& h : cfg.encoder_hidden) h = binio::read_u32(is);
  cfg.embed_dim = binio::read_u32(is);
  cfg.proj_hidden = binio::read_u32(is);
  cfg.proj_dim = binio::read_u32(is);
  const auto kind = binio::read_u32(is);
  if (kind > 2) throw FormatError("unknown projection kind in checkpoint");
  cfg.proj_kind = static_cast<ProjKind>(kind);
  cfg.head_classes = binio::read_u32(is);
  const auto seed = binio::read_u64(is);
  const auto step = binio::read_u64(is);
  const auto n_classes = binio::read_u32(is);
  std::vector<int> classes(n_classes);
  for (auto& c : classes) c = binio::read_i32(is);

  ModelState model(cfg, seed);
  std::optional<Linear<float>> head;
  if (n_classes > 0) {
    head = Linear<float>{Tensor<float>(Shape{n_classes, cfg.embed_dim}, true),
                         Tensor<float>(Shape{n_classes}, true)};
  }
  model.restore_head(std::move(head), std::move(classes));
  for (auto* p : model.all_params()) read_tensor(is, *p);
  model.set_step(step);
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(os, model);
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_checkpoint(is);
}

} // namespace screplay
