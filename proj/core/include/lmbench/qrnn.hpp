#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "lmbench/language_model.hpp"
#include "lmbench/tensor.hpp"

namespace lmbench::qrnn {

/// Convolution weights of one quasi-recurrent layer. Each gate tensor is
/// out_channels x in_channels x window; biases are either all empty or all
/// of length out_channels.
struct LayerWeights {
  Tensor w_z;
  Tensor w_f;
  Tensor w_o;
  std::vector<float> b_z;
  std::vector<float> b_f;
  std::vector<float> b_o;

  std::size_t out_channels() const { return w_z.dim(0); }
  std::size_t in_channels() const { return w_z.dim(1); }
  std::size_t window() const { return w_z.dim(2); }
  bool has_bias() const noexcept { return !b_z.empty(); }

  void validate() const;
};

/// Architecture of a stacked model: embed -> hidden -> ... -> hidden -> embed.
struct Config {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 400;
  std::size_t hidden_dim = 1550;
  std::size_t num_layers = 4;
  std::size_t first_window = 2;
  std::size_t other_window = 1;
  bool bias = false;

  static Config ptb();    // V=10000, d=400, h=1550
  static Config wt103();  // V=267000, d=400, h=2500
  /// "ptb" or "wt103".
  static Config named(std::string_view name);

  std::size_t parameter_count() const;
};

/// Embedding, stacked layers and output bias. The output projection is the
/// embedding transpose.
class Model {
 public:
  /// Validates the shape chain; the last layer must emit embed_dim() channels.
  Model(Tensor embedding, std::vector<LayerWeights> layers, std::vector<float> output_bias);

  std::size_t vocab_size() const { return embedding_.dim(0); }
  std::size_t embed_dim() const { return embedding_.dim(1); }
  const Tensor& embedding() const noexcept { return embedding_; }
  const std::vector<LayerWeights>& layers() const noexcept { return layers_; }
  const std::vector<float>& output_bias() const noexcept { return output_bias_; }
  std::size_t parameter_count() const;

  // Gate weights regrouped as [gate][tap][out][in] so that every
  // pre-activation is a run of contiguous dot products.
  std::span<const float> packed(std::size_t layer) const { return packed_[layer]; }

 private:
  Tensor embedding_;
  std::vector<LayerWeights> layers_;
  std::vector<float> output_bias_;
  std::vector<std::vector<float>> packed_;
};

/// Incremental state: per layer the cell vector and the last window-1 input
/// columns (oldest first, zero at sequence start).
struct LayerState {
  std::vector<float> cell;
  std::vector<float> history;

  bool operator==(const LayerState&) const = default;
};

struct DecodeState {
  std::vector<LayerState> layers;

  static DecodeState fresh(const Model& model);
  bool operator==(const DecodeState&) const = default;
};

/// Causal convolution over time. `x` is in_channels x n, `w` is
/// out_channels x in_channels x window; columns before the start are zero.
/// Returns out_channels x n.
Tensor masked_conv(const Tensor& x, const Tensor& w, std::span<const float> bias);

struct Gates {
  Tensor z;
  Tensor f;
  Tensor o;
};

/// Z = tanh(W_z * X), F = sigmoid(W_f * X), O = sigmoid(W_o * X).
Gates gates(const Tensor& x, const LayerWeights& layer);

struct PoolResult {
  Tensor h;
  std::vector<float> c_final;
};

/// fo-pooling: c_t = f_t * c_{t-1} + (1 - f_t) * z_t, h_t = o_t * c_t.
PoolResult fo_pool(const Tensor& z, const Tensor& f, const Tensor& o, std::span<const float> c0);

/// Logits (vocab x n) for every position of `ids`, from a zero state.
Tensor forward(const Model& model, std::span<const WordId> ids);

/// Max-subtracted softmax in double precision. Throws on NaN.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const float> logits);
void softmax_into(std::span<const float> logits, std::span<double> out);

/// One-token-at-a-time decoding with buffers allocated up front.
class Decoder {
 public:
  explicit Decoder(const Model& model);
  Decoder(const Model& model, DecodeState state);

  /// Consumes `token` and returns the next-word distribution. The span stays
  /// valid until the next call.
  std::span<const double> step(WordId token);

  std::span<const float> logits() const noexcept { return logits_; }
  const DecodeState& state() const noexcept { return state_; }
  void reset();

 private:
  const Model& model_;
  DecodeState state_;
  std::vector<float> input_;
  std::vector<float> pre_;
  std::vector<float> output_;
  std::vector<float> logits_;
  std::vector<double> probs_;
};

/// Functional form of Decoder::step.
std::vector<double> step(const Model& model, DecodeState& state, WordId token);

/// Weights drawn uniformly from [-0.05, 0.05] with a portable generator;
/// biases are zero.
Model init_random(std::uint64_t seed, const Config& config);

/// Binary weight file, see docs/formats.md.
void write_weights(const Model& model, std::ostream& out);
Model read_weights(std::istream& in);
void save_weights(const Model& model, const std::filesystem::path& path);
Model load_weights(const std::filesystem::path& path);

/// Adapter for the shared query contract. Every sentence starts from a fresh
/// state with `start_token` (normally the eos id) as the first input.
class QrnnLanguageModel final : public LanguageModel {
 public:
  QrnnLanguageModel(const Model& model, WordId start_token);

  std::size_t vocab_size() const override { return model_.vocab_size(); }
  void next_word_distribution(std::span<const WordId> context, std::span<double> out) const override;
  void score_sentence(std::span<const WordId> sentence, const PositionVisitor& visit) const override;

 private:
  const Model& model_;
  WordId start_;
};

}  // namespace lmbench::qrnn
