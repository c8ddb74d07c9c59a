#include "ccd/trace.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ccd/error.hpp"
#include "ccd/format.hpp"

namespace ccd {

namespace {

constexpr std::string_view kFormat = "ccd-logits-trace";
constexpr int kVersion = 1;

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

void write_scores(std::ostream& out, const std::vector<double>& v) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    if (v[i] == kBanned) {
      out << "\"-inf\"";
    } else {
      out << format_double(v[i]);
    }
  }
  out << ']';
}

// Scores are parsed from the raw line with from_chars so every double,
// including -0.0, comes back bit-identical.
std::vector<double> read_scores(const std::string& line) {
  const std::string key = "\"logits\":[";
  const auto open = line.find(key);
  const auto close = line.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open + key.size()) {
    throw Error("trace: record without logits array");
  }
  std::vector<double> out;
  std::string_view body(line.data() + open + key.size(), close - open - key.size());
  while (!body.empty()) {
    const auto comma = body.find(',');
    std::string_view item = body.substr(0, comma);
    double v = 0.0;
    if (item == "\"-inf\"") {
      v = kBanned;
    } else if (!parse_double(item, v) || !std::isfinite(v)) {
      throw Error("trace: bad score '" + std::string(item) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

void LogitsTrace::validate() const {
  if (records.size() % 2 != 0) throw Error("trace: odd number of records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const Branch expected = i % 2 == 0 ? Branch::original : Branch::anchored;
    if (r.step != i / 2 || r.branch != expected) {
      throw Error("trace: record " + std::to_string(i) + " out of order");
    }
    if (r.logits.size() != vocab.size()) {
      throw Error("trace: record " + std::to_string(i) + " has wrong vocabulary size");
    }
  }
}

const LogitsTrace::Record* LogitsTrace::find(std::size_t step, Branch branch) const {
  const std::size_t idx = 2 * step + (branch == Branch::anchored ? 1 : 0);
  if (idx >= records.size()) return nullptr;
  const auto& r = records[idx];
  return (r.step == step && r.branch == branch) ? &r : nullptr;
}

void write_trace(std::ostream& out, const LogitsTrace& trace) {
  trace.validate();
  const Vocabulary& v = trace.vocab;
  out << "{\"format\":\"" << kFormat << "\",\"version\":" << kVersion
      << ",\"vocab_size\":" << v.size() << ",\"eos\":" << v.eos() << ",\"tokens\":[";
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << quoted(v.tokens()[i]);
  out << "],\"kinds\":[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << (i ? "," : "") << '"' << to_string(v.kinds()[i]) << '"';
  }
  out << "],\"token_map\":{";
  bool first = true;
  for (const auto& [name, ids] : trace.token_map) {
    out << (first ? "" : ",") << quoted(name) << ":[";
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
    out << ']';
    first = false;
  }
  out << "},\"prompt\":[";
  for (std::size_t i = 0; i < trace.prompt.size(); ++i) out << (i ? "," : "") << trace.prompt[i];
  out << ']';
  if (trace.labels) {
    out << ",\"labels\":[";
    for (std::size_t i = 0; i < trace.labels->labels.size(); ++i) {
      const auto& l = trace.labels->labels[i];
      out << (i ? "," : "") << "{\"name\":" << quoted(l.name) << ",\"prob\":" << format_double(l.prob)
          << '}';
    }
    out << ']';
  }
  out << "}\n";
  for (const auto& r : trace.records) {
    out << "{\"step\":" << r.step << ",\"branch\":\"" << to_string(r.branch) << "\",\"logits\":";
    write_scores(out, r.logits);
    out << "}\n";
  }
}

std::string serialize_trace(const LogitsTrace& trace) {
  std::ostringstream ss;
  write_trace(ss, trace);
  return ss.str();
}

LogitsTrace read_trace(std::istream& in) {
  LogitsTrace trace;
  std::string line;
  std::size_t lineno = 0;
  try {
    if (!std::getline(in, line)) throw Error("trace: missing header");
    ++lineno;
    const auto h = nlohmann::json::parse(line);
    if (h.at("format").get<std::string>() != kFormat) throw Error("trace: not a logits trace");
    if (h.at("version").get<int>() != kVersion) throw Error("trace: unsupported version");
    std::vector<TokenKind> kinds;
    for (const auto& k : h.at("kinds")) kinds.push_back(token_kind_from_string(k.get<std::string>()));
    trace.vocab = Vocabulary(h.at("tokens").get<std::vector<std::string>>(), std::move(kinds),
                             h.at("eos").get<TokenId>());
    if (h.at("vocab_size").get<std::size_t>() != trace.vocab.size()) {
      throw Error("trace: vocab_size disagrees with token list");
    }
    for (const auto& [name, ids] : h.at("token_map").items()) {
      trace.token_map[name] = ids.get<std::vector<TokenId>>();
    }
    trace.prompt = h.at("prompt").get<std::vector<TokenId>>();
    if (h.contains("labels")) {
      ClinicalLabelSet labels;
      for (const auto& l : h.at("labels")) {
        labels.labels.push_back({l.at("name").get<std::string>(), l.at("prob").get<double>()});
      }
      labels.validate();
      trace.labels = std::move(labels);
    }
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      trace.records.push_back({j.at("step").get<std::size_t>(),
                               branch_from_string(j.at("branch").get<std::string>()),
                               read_scores(line)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("trace line " + std::to_string(lineno) + ": " + e.what());
  }
  trace.validate();
  return trace;
}

LogitsTrace parse_trace(const std::string& text) {
  std::istringstream ss(text);
  return read_trace(ss);
}

LogitVector replay_next_logits(const LogitsTrace& trace, std::size_t step, Branch branch) {
  const auto* r = trace.find(step, branch);
  if (!r) {
    throw Error("trace exhausted: no " + std::string(to_string(branch)) + " record for step " +
                std::to_string(step));
  }
  return LogitVector(r->logits);
}

ReplayBackend::ReplayBackend(const LogitsTrace& trace) : trace_(trace) { trace_.validate(); }

ReplayBackend::ReplayBackend(const LogitsTrace& trace, const Vocabulary& session) : ReplayBackend(trace) {
  if (!(trace.vocab == session)) {
    throw Error("trace vocabulary (" + std::to_string(trace.vocab.size()) +
                " tokens) does not match the session vocabulary (" + std::to_string(session.size()) +
                " tokens)");
  }
}

LogitVector ReplayBackend::next_logits(const ModelQuery& query) {
  return replay_next_logits(trace_, query.step, query.branch);
}

RecordingBackend::RecordingBackend(ModelBackend& inner, LogitsTrace& sink) : inner_(inner), sink_(sink) {
  sink_.vocab = inner_.vocabulary();
}

LogitVector RecordingBackend::next_logits(const ModelQuery& query) {
  LogitVector z = inner_.next_logits(query);
  sink_.records.push_back({query.step, query.branch, z.values()});
  return z;
}

}  // namespace ccd
