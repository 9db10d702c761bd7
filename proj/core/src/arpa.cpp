#include "lmbench/arpa.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace lmbench::kn {

namespace {

constexpr double kLogZero10 = -99.0;

std::string format_log10(double ln_value) {
  if (std::isinf(ln_value) && ln_value < 0) return "-99";
  const double v = ln_value / std::numbers::ln10;
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format ARPA value");
  return std::string(buf, end);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_log10(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("non-numeric field '" + std::string(field) + "'", line_no);
  }
  if (v <= kLogZero10) return -std::numeric_limits<double>::infinity();
  return v * std::numbers::ln10;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line with trailing whitespace removed; false at end of input.
  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    auto t = trim(line);
    line.assign(t.begin(), t.end());
    return true;
  }
  // Next non-blank line.
  bool next_nonblank(std::string& line) {
    while (next(line)) {
      if (!line.empty()) return true;
    }
    return false;
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_arpa(const NGramModel& model, std::ostream& out, const ArpaOptions& opts) {
  const auto& vocab = model.vocabulary();
  const WordId bos = model.bos_id();
  auto token = [&](WordId id) -> std::string_view {
    return id == bos ? opts.bos : std::string_view(vocab.token(id));
  };

  // A unigram-only model never uses the begin-of-sentence context, so its
  // placeholder entry is left out.
  const bool skip_bos = model.order() == 1;
  auto entries = [&](int n) {
    const std::size_t size = model.table(n).grams.size();
    return skip_bos ? size - 1 : size;
  };

  out << "\n\\data\\\n";
  for (int n = 1; n <= model.order(); ++n) {
    out << "ngram " << n << '=' << entries(n) << '\n';
  }
  for (int n = 1; n <= model.order(); ++n) {
    const auto& t = model.table(n);
    out << "\n\\" << n << "-grams:\n";
    for (std::size_t i = 0; i < t.grams.size(); ++i) {
      if (skip_bos && t.grams[i][0] == bos) continue;
      out << format_log10(t.log_prob[i]) << '\t';
      auto g = t.grams[i];
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (j) out << ' ';
        out << token(g[j]);
      }
      if (t.log_backoff[i] != 0.0) out << '\t' << format_log10(t.log_backoff[i]);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  if (!out) throw IoError("failed writing ARPA output");
}

void write_arpa(const NGramModel& model, const std::filesystem::path& path, const ArpaOptions& opts) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_arpa(model, out, opts);
}

NGramModel read_arpa(std::istream& in, const ArpaOptions& opts) {
  LineReader reader(in);
  std::string line;

  while (true) {
    if (!reader.next(line)) throw ParseError("missing \\data\\ header", reader.line_no());
    if (line == "\\data\\") break;
  }

  std::vector<std::size_t> expected;
  while (true) {
    if (!reader.next_nonblank(line)) throw ParseError("unexpected end of input in \\data\\", reader.line_no());
    if (line.rfind("ngram ", 0) != 0) break;
    auto body = trim(std::string_view(line).substr(6));
    auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("malformed ngram count line", reader.line_no());
    std::size_t n = 0;
    std::size_t count = 0;
    auto ns = trim(body.substr(0, eq));
    auto cs = trim(body.substr(eq + 1));
    auto r1 = std::from_chars(ns.data(), ns.data() + ns.size(), n);
    auto r2 = std::from_chars(cs.data(), cs.data() + cs.size(), count);
    if (r1.ec != std::errc() || r1.ptr != ns.data() + ns.size() || r2.ec != std::errc() ||
        r2.ptr != cs.data() + cs.size()) {
      throw ParseError("non-numeric field in ngram count line", reader.line_no());
    }
    if (n != expected.size() + 1) throw ParseError("ngram counts must list orders 1..N in sequence", reader.line_no());
    expected.push_back(count);
  }
  if (expected.empty()) throw ParseError("no ngram counts in \\data\\ section", reader.line_no());

  const std::size_t order = expected.size();
  std::vector<std::string> tokens;
  std::unordered_map<std::string, WordId> ids;
  std::optional<std::size_t> bos_row;
  std::vector<OrderTable> tables;
  std::vector<std::vector<std::string>> unigram_rows;  // held until ids are final
  std::vector<double> uni_prob;
  std::vector<double> uni_bow;

  for (std::size_t n = 1; n <= order; ++n) {
    const std::string header = "\\" + std::to_string(n) + "-grams:";
    if (line != header) {
      throw ParseError("expected section header '" + header + "', found '" + line + "'", reader.line_no());
    }
    OrderTable t{GramList(n), {}, {}};
    std::vector<WordId> gram(n);
    std::size_t rows = 0;
    bool more = false;
    while ((more = reader.next(line))) {
      if (line.empty()) continue;
      if (line.front() == '\\') break;
      auto fields = split_tokens(line);
      if (fields.size() != n + 1 && fields.size() != n + 2) {
        throw ParseError("expected " + std::to_string(n + 1) + " or " + std::to_string(n + 2) +
                             " fields in " + std::to_string(n) + "-gram entry",
                         reader.line_no());
      }
      const double lp = parse_log10(fields[0], reader.line_no());
      const double bow = fields.size() == n + 2 ? parse_log10(fields[n + 1], reader.line_no()) : 0.0;
      if (bow != 0.0 && n == order) {
        throw ParseError("backoff weight on a highest-order entry", reader.line_no());
      }
      if (n == 1) {
        std::string tok(fields[1]);
        if (tok == opts.bos) {
          if (bos_row) throw ParseError("duplicate unigram '" + tok + "'", reader.line_no());
          bos_row = uni_prob.size();
        } else {
          if (ids.contains(tok)) throw ParseError("duplicate unigram '" + tok + "'", reader.line_no());
          ids.emplace(tok, static_cast<WordId>(tokens.size()));
          tokens.push_back(tok);
        }
        unigram_rows.push_back({std::move(tok)});
        uni_prob.push_back(lp);
        uni_bow.push_back(bow);
      } else {
        const auto bos_id = static_cast<WordId>(tokens.size());
        for (std::size_t j = 0; j < n; ++j) {
          auto f = fields[j + 1];
          if (f == opts.bos) {
            gram[j] = bos_id;
            continue;
          }
          auto it = ids.find(std::string(f));
          if (it == ids.end()) {
            throw ParseError("word '" + std::string(f) + "' missing from unigram section", reader.line_no());
          }
          gram[j] = it->second;
        }
        t.grams.push_back(gram);
        t.log_prob.push_back(lp);
        t.log_backoff.push_back(bow);
      }
      ++rows;
    }
    if (rows != expected[n - 1]) {
      throw ParseError("order " + std::to_string(n) + " declares " + std::to_string(expected[n - 1]) +
                           " entries but has " + std::to_string(rows),
                       reader.line_no());
    }
    if (n == 1) {
      const auto bos_id = static_cast<WordId>(tokens.size());
      WordId next = 0;
      for (std::size_t r = 0; r < unigram_rows.size(); ++r) {
        WordId id = (bos_row && *bos_row == r) ? bos_id : next++;
        t.grams.push_back(std::span<const WordId>(&id, 1));
        t.log_prob.push_back(uni_prob[r]);
        t.log_backoff.push_back(uni_bow[r]);
      }
    }
    tables.push_back(std::move(t));
    if (!more) throw ParseError("unexpected end of input; missing \\end\\", reader.line_no());
  }
  if (line != "\\end\\") throw ParseError("expected \\end\\, found '" + line + "'", reader.line_no());

  auto vocab = Vocabulary::from_tokens(std::move(tokens), opts.unk, opts.eos);
  try {
    return NGramModel(std::move(vocab), std::move(tables));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent ARPA model: ") + e.what(), 0);
  }
}

NGramModel read_arpa(const std::filesystem::path& path, const ArpaOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return read_arpa(in, opts);
}

}  // namespace lmbench::kn
