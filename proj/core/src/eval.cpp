#include "lmbench/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace lmbench::eval {

bool in_top_k(std::span<const double> distribution, WordId word, std::size_t k) {
  if (word >= distribution.size()) throw Error("word id " + std::to_string(word) + " out of range");
  const double p = distribution[word];
  // Rank of `word` = words strictly more probable + equally probable words with smaller ids.
  std::size_t rank = 0;
  for (std::size_t v = 0; v < distribution.size(); ++v) {
    const double q = distribution[v];
    if (q > p || (q == p && v < word)) {
      if (++rank >= k) return false;
    }
  }
  return true;
}

namespace {

struct Accumulator {
  std::size_t tokens = 0;
  std::size_t hits = 0;
  double nats = 0.0;
};

Accumulator score(const LanguageModel& model, std::span<const WordId> sentence, std::size_t k) {
  if (sentence.empty()) throw Error("cannot evaluate an empty sentence");
  const std::size_t v = model.vocab_size();
  if (k < 1 || k > v) throw Error("k must lie in [1, vocabulary size]");
  Accumulator acc;
  model.score_sentence(sentence, [&](std::size_t t, std::span<const double> dist) {
    const WordId w = sentence[t];
    if (w >= v) throw Error("word id " + std::to_string(w) + " out of range");
    const double p = dist[w];
    if (!(p > 0.0)) throw Error("non-smoothed model");
    acc.nats -= std::log(p);
    if (in_top_k(dist, w, k)) ++acc.hits;
    ++acc.tokens;
  });
  return acc;
}

SentenceEval to_record(const Accumulator& acc) {
  SentenceEval e;
  e.token_count = acc.tokens;
  e.cross_entropy = acc.nats / static_cast<double>(acc.tokens);
  e.perplexity = std::exp(e.cross_entropy);
  e.recall_error = 1.0 - static_cast<double>(acc.hits) / static_cast<double>(acc.tokens);
  return e;
}

}  // namespace

SentenceEval sentence_perplexity(const LanguageModel& model, std::span<const WordId> sentence) {
  auto e = to_record(score(model, sentence, 1));
  e.recall_error = 0.0;
  return e;
}

double recall_at_k(const LanguageModel& model, std::span<const WordId> sentence, std::size_t k) {
  const auto acc = score(model, sentence, k);
  return static_cast<double>(acc.hits) / static_cast<double>(acc.tokens);
}

SentenceEval evaluate_sentence(const LanguageModel& model, std::span<const WordId> sentence, std::size_t k) {
  return to_record(score(model, sentence, k));
}

CorpusEval evaluate_corpus(const LanguageModel& model, const Dataset& data, std::size_t k, unsigned threads) {
  if (data.empty()) throw Error("cannot evaluate an empty dataset");
  const std::size_t n = data.sentences.size();
  std::vector<Accumulator> parts(n);

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) parts[i] = score(model, data.sentences[i], k);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w * n / threads; i < (w + 1) * n / threads; ++i) {
              parts[i] = score(model, data.sentences[i], k);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  CorpusEval out;
  out.k = k;
  out.sentences.reserve(n);
  double nats = 0.0;
  std::size_t hits = 0;
  for (const auto& p : parts) {
    out.sentences.push_back(to_record(p));
    out.token_count += p.tokens;
    nats += p.nats;
    hits += p.hits;
  }
  out.cross_entropy = nats / static_cast<double>(out.token_count);
  out.perplexity = std::exp(out.cross_entropy);
  out.recall_at_k = static_cast<double>(hits) / static_cast<double>(out.token_count);
  return out;
}

CorrelationReport pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("correlation inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw Error("correlation needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error("degenerate point set");
  CorrelationReport rep;
  rep.n = n;
  rep.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  rep.r_squared = rep.r * rep.r;
  return rep;
}

CorrelationReport correlate(std::span<const SentenceEval> records) {
  std::vector<double> x, y;
  x.reserve(records.size());
  y.reserve(records.size());
  for (const auto& r : records) {
    x.push_back(r.cross_entropy);
    y.push_back(r.recall_error);
  }
  return pearson(x, y);
}

void export_scatter(std::span<const SentenceEval> records, const std::filesystem::path& path) {
  if (records.empty()) throw Error("no records to export");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "cross_entropy,recall_error,token_count\n";
  char buf[96];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%zu\n", r.cross_entropy, r.recall_error, r.token_count);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SentenceEval> import_scatter(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines.front() != "cross_entropy,recall_error,token_count") {
    throw ParseError("missing scatter CSV header", 1);
  }
  std::vector<SentenceEval> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    SentenceEval e;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto r1 = std::from_chars(p, end, e.cross_entropy);
    if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ',') throw ParseError("malformed scatter row", i + 1);
    auto r2 = std::from_chars(r1.ptr + 1, end, e.recall_error);
    if (r2.ec != std::errc() || r2.ptr == end || *r2.ptr != ',') throw ParseError("malformed scatter row", i + 1);
    auto r3 = std::from_chars(r2.ptr + 1, end, e.token_count);
    if (r3.ec != std::errc() || r3.ptr != end) throw ParseError("malformed scatter row", i + 1);
    e.perplexity = std::exp(e.cross_entropy);
    out.push_back(e);
  }
  return out;
}

}  // namespace lmbench::eval
