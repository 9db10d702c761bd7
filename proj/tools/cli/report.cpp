#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "cli/commands.hpp"
#include "lmbench/common.hpp"

namespace lmbench::cli {

using nlohmann::json;

namespace {

struct Row {
  std::string method;
  std::string dataset;
  json val_ppl = nullptr;
  json test_ppl = nullptr;
  json recall = nullptr;
  json k = nullptr;
  json ms_per_query = nullptr;
  json mj_per_query = nullptr;
};

const json& field(const json& doc, const char* key, const std::string& path) {
  if (!doc.contains(key)) throw Error("'" + path + "' lacks field '" + key + "'");
  return doc.at(key);
}

std::string format(const json& v, const char* fmt, double scale = 1.0) {
  if (!v.is_number()) return "--";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v.get<double>() * scale);
  return buf;
}

// Latency and energy span several decades; large values print as integers.
std::string format_quantity(const json& v) {
  if (v.is_number() && v.get<double>() >= 100.0) return format(v, "%.0f");
  return format(v, "%.3g");
}

json ratio(const json& a, const json& b) {
  if (!a.is_number() || !b.is_number() || b.get<double>() <= 0.0) return nullptr;
  return a.get<double>() / b.get<double>();
}

}  // namespace

ReportResult cmd_report(const ReportOptions& o) {
  if (o.inputs.empty()) throw Error("report needs at least one input");
  std::vector<Row> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> index;

  for (const auto& path : o.inputs) {
    const json doc = read_json(path);
    const json& version = field(doc, "format_version", path);
    if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
      throw Error("format version mismatch in '" + path + "': expected " + std::to_string(kFormatVersion) +
                  ", got " + version.dump());
    }
    const auto kind = field(doc, "kind", path).get<std::string>();
    if (kind != "eval" && kind != "bench") throw Error("'" + path + "' is a " + kind + " document, not eval or bench");
    const auto method = field(doc, "model", path).get<std::string>();
    const auto dataset = field(doc, "dataset", path).get<std::string>();

    auto [it, fresh] = index.try_emplace({method, dataset}, rows.size());
    if (fresh) rows.push_back(Row{method, dataset});
    Row& row = rows[it->second];

    if (kind == "eval") {
      const auto split = field(doc, "split", path).get<std::string>();
      if (split == "valid") {
        row.val_ppl = field(doc, "perplexity", path);
      } else {
        row.test_ppl = field(doc, "perplexity", path);
        row.recall = field(doc, "recall_at_k", path);
        row.k = field(doc, "k", path);
      }
    } else {
      row.ms_per_query = field(field(doc, "ms_per_query", path), "mean", path);
      row.mj_per_query = field(doc, "mj_per_query", path);
    }
  }

  // Group rows by dataset, keeping first-appearance order.
  std::vector<std::string> datasets;
  for (const auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
  }

  json out;
  out["format_version"] = kFormatVersion;
  out["kind"] = "report";
  out["config"] = to_json(o);
  out["rows"] = json::array();
  out["ratios"] = json::array();
  for (const auto& ds : datasets) {
    const Row* base = nullptr;
    for (const auto& r : rows) {
      if (r.dataset == ds && r.method.starts_with(o.baseline)) {
        base = &r;
        break;
      }
    }
    for (const auto& r : rows) {
      if (r.dataset != ds) continue;
      out["rows"].push_back({{"method", r.method},
                             {"dataset", r.dataset},
                             {"val_ppl", r.val_ppl},
                             {"test_ppl", r.test_ppl},
                             {"recall_at_k", r.recall},
                             {"k", r.k},
                             {"ms_per_query", r.ms_per_query},
                             {"mj_per_query", r.mj_per_query}});
      if (base != nullptr && &r != base) {
        out["ratios"].push_back({{"method", r.method},
                                 {"dataset", ds},
                                 {"baseline", base->method},
                                 {"latency_ratio", ratio(r.ms_per_query, base->ms_per_query)},
                                 {"energy_ratio", ratio(r.mj_per_query, base->mj_per_query)}});
      }
    }
  }
  return {out, render_table(out)};
}

std::string render_table(const json& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-3s %-12s %9s %9s %7s %9s %9s\n", "#", "Method", "Val.", "Test", "R@3",
                "ms/q", "mJ/q");
  const std::string header = line;
  const std::string rule(header.size() - 1, '-');
  os << header << rule << '\n';

  std::string current;
  int number = 0;
  for (const auto& r : report.at("rows")) {
    const auto ds = r.at("dataset").get<std::string>();
    if (number == 0 || ds != current) {
      if (number != 0) os << rule << '\n';
      os << "[" << ds << "]\n";
      current = ds;
    }
    ++number;
    std::snprintf(line, sizeof line, "%-3d %-12s %9s %9s %7s %9s %9s\n", number,
                  r.at("method").get<std::string>().c_str(), format(r.at("val_ppl"), "%.1f").c_str(),
                  format(r.at("test_ppl"), "%.1f").c_str(), format(r.at("recall_at_k"), "%.1f%%", 100.0).c_str(),
                  format_quantity(r.at("ms_per_query")).c_str(), format_quantity(r.at("mj_per_query")).c_str());
    os << line;
  }
  os << rule << '\n';
  for (const auto& q : report.at("ratios")) {
    os << q.at("method").get<std::string>() << " vs " << q.at("baseline").get<std::string>() << " ["
       << q.at("dataset").get<std::string>() << "]: latency " << format(q.at("latency_ratio"), "%.1fx")
       << ", energy " << format(q.at("energy_ratio"), "%.1fx") << '\n';
  }
  return os.str();
}

}  // namespace lmbench::cli
