#include "cli/model_spec.hpp"

#include <cstdlib>

#include "lmbench/arpa.hpp"

namespace lmbench::cli {

ModelSpec ModelSpec::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw Error("model spec must be kn:<arpa>, qrnn:<weights> or qrnn:random:<ptb|wt103> (or qrnn:<ptb|wt103>-random), got '" +
                std::string(text) + "'");
  }
  auto kind = text.substr(0, colon);
  auto rest = text.substr(colon + 1);
  ModelSpec spec;
  if (kind == "kn") {
    spec.kind = Kind::kKn;
  } else if (kind == "qrnn") {
    if (rest.starts_with("random:")) {
      spec.kind = Kind::kQrnnRandom;
      rest.remove_prefix(7);
      qrnn::Config::named(rest);  // validates the preset name
    } else if (rest == "ptb-random" || rest == "wt103-random") {
      spec.kind = Kind::kQrnnRandom;
      rest.remove_suffix(7);
    } else {
      spec.kind = Kind::kQrnnFile;
    }
  } else {
    throw Error("unknown model kind '" + std::string(kind) + "'");
  }
  spec.arg = std::string(rest);
  return spec;
}

std::filesystem::path resolve_data_path(const std::filesystem::path& path) {
  if (path.empty() || path.is_absolute() || std::filesystem::exists(path)) return path;
  if (const char* root = std::getenv("LMBENCH_DATA"); root != nullptr && *root != '\0') {
    auto rooted = std::filesystem::path(root) / path;
    if (std::filesystem::exists(rooted)) return rooted;
  }
  return path;
}

std::string dataset_name_from(const std::filesystem::path& path) {
  auto name = path.filename().string();
  auto dot = name.find('.');
  return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

std::string split_name_from(const std::filesystem::path& path) {
  auto name = path.filename().string();
  if (name.find("valid") != std::string::npos || name.find("dev") != std::string::npos) return "valid";
  return "test";
}

namespace {

Vocabulary qrnn_vocabulary(const VocabSource& src, bool allow_fallback) {
  if (src.vocab_file) return Vocabulary::load(resolve_data_path(*src.vocab_file));
  if (src.train_corpus) return Vocabulary::build(read_lines(resolve_data_path(*src.train_corpus)));
  if (allow_fallback && src.fallback_corpus) {
    return Vocabulary::build(read_lines(resolve_data_path(*src.fallback_corpus)));
  }
  throw Error("qrnn models need --vocab or --train to define the vocabulary");
}

}  // namespace

std::unique_ptr<LoadedModel> load_model(const ModelSpec& spec, const VocabSource& src, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelSpec::Kind::kKn: {
      auto ngram = kn::read_arpa(resolve_data_path(spec.arg));
      auto out = std::make_unique<LoadedModel>("kn", "KN-" + std::to_string(ngram.order()), ngram.vocabulary());
      out->ngram.emplace(std::move(ngram));
      out->lm = std::make_unique<KnLanguageModel>(*out->ngram);
      return out;
    }
    case ModelSpec::Kind::kQrnnFile: {
      auto vocab = qrnn_vocabulary(src, false);
      auto net = qrnn::load_weights(resolve_data_path(spec.arg));
      if (net.vocab_size() != vocab.size()) {
        throw Error("vocabulary size " + std::to_string(vocab.size()) + " does not match model vocabulary " +
                    std::to_string(net.vocab_size()));
      }
      auto out = std::make_unique<LoadedModel>("qrnn", "QRNN", std::move(vocab));
      out->network.emplace(std::move(net));
      out->lm = std::make_unique<qrnn::QrnnLanguageModel>(*out->network, out->vocab.eos_id());
      return out;
    }
    case ModelSpec::Kind::kQrnnRandom: {
      auto vocab = qrnn_vocabulary(src, true);
      auto config = qrnn::Config::named(spec.arg);
      if (vocab.size() > config.vocab_size) {
        throw Error("vocabulary size " + std::to_string(vocab.size()) + " exceeds the " + spec.arg +
                    " model vocabulary " + std::to_string(config.vocab_size));
      }
      auto out = std::make_unique<LoadedModel>("qrnn", "QRNN", std::move(vocab));
      out->network.emplace(qrnn::init_random(seed, config));
      out->lm = std::make_unique<qrnn::QrnnLanguageModel>(*out->network, out->vocab.eos_id());
      return out;
    }
  }
  throw Error("unreachable model kind");
}

}  // namespace lmbench::cli
