#include "lmbench/qrnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lmbench::qrnn {

namespace {

// One out-of-line instance so batch and incremental paths sum in the same order.
[[gnu::noinline]] float dot(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// Regroups an out x in x window tensor into `window` contiguous out x in blocks.
void pack_taps(const Tensor& w, float* dst) {
  const std::size_t m = w.dim(0), k = w.dim(1), r = w.dim(2);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < k; ++c) dst[(j * m + i) * k + c] = w(i, c, j);
}

// Channel-major k x n -> time-major n x k.
std::vector<float> to_time_major(const Tensor& x) {
  const std::size_t k = x.dim(0), n = x.dim(1);
  std::vector<float> xt(n * k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t t = 0; t < n; ++t) xt[t * k + c] = x(c, t);
  return xt;
}

// out(i) = bias(i) + sum_j taps_j(i,:) . cols[j]
void conv_column(const float* taps, std::size_t m, std::size_t k, std::size_t r,
                 std::span<const float> bias, const float* const* cols, float* out) {
  for (std::size_t i = 0; i < m; ++i) {
    float acc = bias.empty() ? 0.0f : bias[i];
    for (std::size_t j = 0; j < r; ++j) acc += dot(taps + (j * m + i) * k, cols[j], k);
    out[i] = acc;
  }
}

// Causal convolution over time-major input with pre-packed taps; returns m x n.
Tensor conv_packed(std::span<const float> xt, std::size_t n, std::size_t k, const float* taps,
                   std::size_t m, std::size_t r, std::span<const float> bias) {
  Tensor out({m, n});
  const std::vector<float> zeros(k, 0.0f);
  std::vector<const float*> cols(r);
  std::vector<float> column(m);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < r; ++j) {
      const std::size_t back = r - 1 - j;
      cols[j] = t >= back ? xt.data() + (t - back) * k : zeros.data();
    }
    conv_column(taps, m, k, r, bias, cols.data(), column.data());
    for (std::size_t i = 0; i < m; ++i) out(i, t) = column[i];
  }
  return out;
}

void check_bias(std::span<const float> bias, std::size_t m) {
  if (!bias.empty() && bias.size() != m) throw ShapeError("bias length must equal output channels");
}

Gates activate(Tensor z, Tensor f, Tensor o) {
  for (auto& v : z.data()) v = std::tanh(v);
  for (auto& v : f.data()) v = sigmoid(v);
  for (auto& v : o.data()) v = sigmoid(v);
  return {std::move(z), std::move(f), std::move(o)};
}

}  // namespace

void LayerWeights::validate() const {
  if (w_z.rank() != 3) throw ShapeError("gate weights must be out x in x window");
  if (w_f.shape() != w_z.shape() || w_o.shape() != w_z.shape()) {
    throw ShapeError("gate weight tensors must share one shape");
  }
  if (window() < 1) throw ShapeError("window size must be at least 1");
  if (out_channels() == 0 || in_channels() == 0) throw ShapeError("layer dimensions must be positive");
  const bool any = !b_z.empty() || !b_f.empty() || !b_o.empty();
  if (any && (b_z.size() != out_channels() || b_f.size() != out_channels() || b_o.size() != out_channels())) {
    throw ShapeError("biases must be absent or all of length out_channels");
  }
}

Config Config::ptb() { return Config{10000, 400, 1550, 4, 2, 1, false}; }
Config Config::wt103() { return Config{267000, 400, 2500, 4, 2, 1, false}; }

Config Config::named(std::string_view name) {
  if (name == "ptb") return ptb();
  if (name == "wt103") return wt103();
  throw Error("unknown QRNN config '" + std::string(name) + "' (expected ptb or wt103)");
}

std::size_t Config::parameter_count() const {
  std::size_t total = vocab_size * embed_dim + vocab_size;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t k = l == 0 ? embed_dim : hidden_dim;
    const std::size_t m = l + 1 == num_layers ? embed_dim : hidden_dim;
    const std::size_t r = l == 0 ? first_window : other_window;
    total += 3 * m * k * r + (bias ? 3 * m : 0);
  }
  return total;
}

Model::Model(Tensor embedding, std::vector<LayerWeights> layers, std::vector<float> output_bias)
    : embedding_(std::move(embedding)), layers_(std::move(layers)), output_bias_(std::move(output_bias)) {
  if (embedding_.rank() != 2 || embedding_.dim(0) == 0 || embedding_.dim(1) == 0) {
    throw ShapeError("embedding must be a non-empty vocab x dim matrix");
  }
  if (layers_.empty()) throw ShapeError("model needs at least one layer");
  if (output_bias_.size() != vocab_size()) throw ShapeError("output bias length must equal vocabulary size");
  std::size_t width = embed_dim();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].validate();
    if (layers_[l].in_channels() != width) {
      throw ShapeError("layer " + std::to_string(l) + " expects " + std::to_string(layers_[l].in_channels()) +
                       " input channels but receives " + std::to_string(width));
    }
    width = layers_[l].out_channels();
  }
  if (width != embed_dim()) throw ShapeError("tied embedding requires final width d");

  packed_.reserve(layers_.size());
  for (const auto& layer : layers_) {
    const std::size_t block = layer.w_z.size();
    std::vector<float> p(3 * block);
    pack_taps(layer.w_z, p.data());
    pack_taps(layer.w_f, p.data() + block);
    pack_taps(layer.w_o, p.data() + 2 * block);
    packed_.push_back(std::move(p));
  }
}

std::size_t Model::parameter_count() const {
  std::size_t total = embedding_.size() + output_bias_.size();
  for (const auto& l : layers_) total += 3 * l.w_z.size() + l.b_z.size() + l.b_f.size() + l.b_o.size();
  return total;
}

DecodeState DecodeState::fresh(const Model& model) {
  DecodeState s;
  for (const auto& l : model.layers()) {
    s.layers.push_back(LayerState{std::vector<float>(l.out_channels(), 0.0f),
                                  std::vector<float>((l.window() - 1) * l.in_channels(), 0.0f)});
  }
  return s;
}

Tensor masked_conv(const Tensor& x, const Tensor& w, std::span<const float> bias) {
  if (x.rank() != 2 || w.rank() != 3) throw ShapeError("masked_conv expects a k x n input and m x k x r weights");
  if (x.dim(0) != w.dim(1)) {
    throw ShapeError("input has " + std::to_string(x.dim(0)) + " channels but weights expect " +
                     std::to_string(w.dim(1)));
  }
  if (x.dim(1) == 0) throw ShapeError("masked_conv needs at least one time step");
  if (w.dim(2) == 0) throw ShapeError("window size must be at least 1");
  check_bias(bias, w.dim(0));
  std::vector<float> taps(w.size());
  pack_taps(w, taps.data());
  auto xt = to_time_major(x);
  return conv_packed(xt, x.dim(1), x.dim(0), taps.data(), w.dim(0), w.dim(2), bias);
}

Gates gates(const Tensor& x, const LayerWeights& layer) {
  layer.validate();
  return activate(masked_conv(x, layer.w_z, layer.b_z), masked_conv(x, layer.w_f, layer.b_f),
                  masked_conv(x, layer.w_o, layer.b_o));
}

PoolResult fo_pool(const Tensor& z, const Tensor& f, const Tensor& o, std::span<const float> c0) {
  if (z.rank() != 2 || f.shape() != z.shape() || o.shape() != z.shape()) {
    throw ShapeError("fo_pool inputs must share one m x n shape");
  }
  const std::size_t m = z.dim(0), n = z.dim(1);
  if (c0.size() != m) throw ShapeError("initial cell length must equal channel count");
  PoolResult out{Tensor({m, n}), std::vector<float>(c0.begin(), c0.end())};
  auto& c = out.c_final;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      const float ft = f(i, t);
      c[i] = ft * c[i] + (1.0f - ft) * z(i, t);
      out.h(i, t) = o(i, t) * c[i];
    }
  }
  return out;
}

Tensor forward(const Model& model, std::span<const WordId> ids) {
  if (ids.empty()) throw Error("forward needs at least one token");
  const std::size_t v = model.vocab_size(), d = model.embed_dim(), n = ids.size();
  for (WordId id : ids) {
    if (id >= v) throw Error("token id " + std::to_string(id) + " out of range");
  }

  // Time-major activations between layers.
  std::vector<float> xt(n * d);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = model.embedding().row(ids[t]);
    std::copy(row.begin(), row.end(), xt.begin() + static_cast<std::ptrdiff_t>(t * d));
  }
  std::size_t k = d;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& layer = model.layers()[l];
    const std::size_t m = layer.out_channels(), r = layer.window();
    const float* p = model.packed(l).data();
    const std::size_t block = layer.w_z.size();
    auto g = activate(conv_packed(xt, n, k, p, m, r, layer.b_z),
                      conv_packed(xt, n, k, p + block, m, r, layer.b_f),
                      conv_packed(xt, n, k, p + 2 * block, m, r, layer.b_o));
    auto pooled = fo_pool(g.z, g.f, g.o, std::vector<float>(m, 0.0f));
    xt = to_time_major(pooled.h);
    k = m;
  }

  Tensor logits({v, n});
  const auto& bias = model.output_bias();
  for (std::size_t t = 0; t < n; ++t) {
    const float* h = xt.data() + t * d;
    for (std::size_t w = 0; w < v; ++w) logits(w, t) = bias[w] + dot(model.embedding().row(w).data(), h, d);
  }
  return logits;
}

void softmax_into(std::span<const float> logits, std::span<double> out) {
  if (out.size() != logits.size()) throw ShapeError("softmax output size mismatch");
  if (logits.empty()) throw Error("softmax of an empty vector");
  double hi = -std::numeric_limits<double>::infinity();
  for (float x : logits) {
    if (std::isnan(x)) throw Error("softmax input contains NaN");
    hi = std::max(hi, static_cast<double>(x));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(static_cast<double>(logits[i]) - hi);
    total += out[i];
  }
  for (auto& p : out) p /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error("softmax of an empty vector");
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : logits) {
    if (std::isnan(x)) throw Error("softmax input contains NaN");
    hi = std::max(hi, x);
  }
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

Decoder::Decoder(const Model& model) : Decoder(model, DecodeState::fresh(model)) {}

Decoder::Decoder(const Model& model, DecodeState state) : model_(model), state_(std::move(state)) {
  const auto& layers = model_.layers();
  if (state_.layers.size() != layers.size()) throw ShapeError("decode state has wrong layer count");
  std::size_t widest = model_.embed_dim();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    if (state_.layers[l].cell.size() != L.out_channels() ||
        state_.layers[l].history.size() != (L.window() - 1) * L.in_channels()) {
      throw ShapeError("decode state does not match layer " + std::to_string(l));
    }
    widest = std::max(widest, L.out_channels());
  }
  input_.reserve(widest);
  output_.reserve(widest);
  pre_.resize(3 * widest);
  logits_.resize(model_.vocab_size());
  probs_.resize(model_.vocab_size());
}

void Decoder::reset() { state_ = DecodeState::fresh(model_); }

std::span<const double> Decoder::step(WordId token) {
  const std::size_t v = model_.vocab_size(), d = model_.embed_dim();
  if (token >= v) throw Error("token id " + std::to_string(token) + " out of range");
  auto emb = model_.embedding().row(token);
  input_.assign(emb.begin(), emb.end());

  const float* cols[16];
  for (std::size_t l = 0; l < model_.layers().size(); ++l) {
    const auto& layer = model_.layers()[l];
    auto& st = state_.layers[l];
    const std::size_t m = layer.out_channels(), k = layer.in_channels(), r = layer.window();
    if (r > 16) throw ShapeError("window sizes above 16 are not supported for decoding");
    for (std::size_t j = 0; j + 1 < r; ++j) cols[j] = st.history.data() + j * k;
    cols[r - 1] = input_.data();

    const float* p = model_.packed(l).data();
    const std::size_t block = layer.w_z.size();
    conv_column(p, m, k, r, layer.b_z, cols, pre_.data());
    conv_column(p + block, m, k, r, layer.b_f, cols, pre_.data() + m);
    conv_column(p + 2 * block, m, k, r, layer.b_o, cols, pre_.data() + 2 * m);

    output_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const float z = std::tanh(pre_[i]);
      const float f = sigmoid(pre_[m + i]);
      const float o = sigmoid(pre_[2 * m + i]);
      st.cell[i] = f * st.cell[i] + (1.0f - f) * z;
      output_[i] = o * st.cell[i];
    }
    if (r > 1) {
      std::copy(st.history.begin() + static_cast<std::ptrdiff_t>(k), st.history.end(), st.history.begin());
      std::copy(input_.begin(), input_.end(), st.history.end() - static_cast<std::ptrdiff_t>(k));
    }
    std::swap(input_, output_);
  }

  const auto& bias = model_.output_bias();
  for (std::size_t w = 0; w < v; ++w) logits_[w] = bias[w] + dot(model_.embedding().row(w).data(), input_.data(), d);
  softmax_into(logits_, probs_);
  return probs_;
}

std::vector<double> step(const Model& model, DecodeState& state, WordId token) {
  Decoder dec(model, std::move(state));
  auto probs = dec.step(token);
  std::vector<double> out(probs.begin(), probs.end());
  state = dec.state();
  return out;
}

Model init_random(std::uint64_t seed, const Config& config) {
  if (config.vocab_size == 0 || config.embed_dim == 0 || config.hidden_dim == 0 || config.num_layers == 0 ||
      config.first_window == 0 || config.other_window == 0) {
    throw Error("QRNN config dimensions must be positive");
  }
  std::mt19937_64 gen(seed);
  // Top 24 bits -> float in [0, 1); portable across standard libraries.
  auto draw = [&gen]() {
    const double u = static_cast<double>(gen() >> 40) * (1.0 / 16777216.0);
    return static_cast<float>(-0.05 + 0.1 * u);
  };
  auto fill = [&](Tensor& t) {
    for (auto& x : t.data()) x = draw();
  };

  Tensor embedding({config.vocab_size, config.embed_dim});
  fill(embedding);
  std::vector<LayerWeights> layers;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t k = l == 0 ? config.embed_dim : config.hidden_dim;
    const std::size_t m = l + 1 == config.num_layers ? config.embed_dim : config.hidden_dim;
    const std::size_t r = l == 0 ? config.first_window : config.other_window;
    LayerWeights lw{Tensor({m, k, r}), Tensor({m, k, r}), Tensor({m, k, r}), {}, {}, {}};
    fill(lw.w_z);
    fill(lw.w_f);
    fill(lw.w_o);
    if (config.bias) {
      lw.b_z.assign(m, 0.0f);
      lw.b_f.assign(m, 0.0f);
      lw.b_o.assign(m, 0.0f);
    }
    layers.push_back(std::move(lw));
  }
  return Model(std::move(embedding), std::move(layers), std::vector<float>(config.vocab_size, 0.0f));
}

QrnnLanguageModel::QrnnLanguageModel(const Model& model, WordId start_token) : model_(model), start_(start_token) {
  if (start_ >= model_.vocab_size()) throw Error("start token out of range");
}

void QrnnLanguageModel::next_word_distribution(std::span<const WordId> context, std::span<double> out) const {
  if (out.size() != vocab_size()) throw ShapeError("distribution buffer must have vocabulary size");
  Decoder dec(model_);
  auto probs = dec.step(start_);
  for (WordId w : context) probs = dec.step(w);
  std::copy(probs.begin(), probs.end(), out.begin());
}

void QrnnLanguageModel::score_sentence(std::span<const WordId> sentence, const PositionVisitor& visit) const {
  Decoder dec(model_);
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    visit(t, dec.step(t == 0 ? start_ : sentence[t - 1]));
  }
}

}  // namespace lmbench::qrnn
