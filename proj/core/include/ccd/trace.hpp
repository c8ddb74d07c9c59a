#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccd/backends.hpp"
#include "ccd/expert_signal.hpp"
#include "ccd/vocab.hpp"

namespace ccd {

// Recorded dual-branch logits of one generation. On disk: one JSON header
// line followed by one JSON line per (step, branch) record. Scores are
// written as shortest round-trip decimals, banned entries as "-inf".
struct LogitsTrace {
  struct Record {
    std::size_t step = 0;
    Branch branch = Branch::original;
    std::vector<double> logits;
    friend bool operator==(const Record&, const Record&) = default;
  };

  Vocabulary vocab;
  TokenMap token_map;
  std::optional<ClinicalLabelSet> labels;  // expert output used for the run, if captured
  std::vector<TokenId> prompt;
  std::vector<Record> records;

  // Records must come step by step, original before anchored, with one
  // vocabulary-sized vector each.
  void validate() const;
  std::size_t steps() const { return records.size() / 2; }
  const Record* find(std::size_t step, Branch branch) const;

  friend bool operator==(const LogitsTrace&, const LogitsTrace&) = default;
};

void write_trace(std::ostream& out, const LogitsTrace& trace);
std::string serialize_trace(const LogitsTrace& trace);
LogitsTrace read_trace(std::istream& in);
LogitsTrace parse_trace(const std::string& text);

// Exact stored scores; throws "trace exhausted" when the record is missing.
LogitVector replay_next_logits(const LogitsTrace& trace, std::size_t step, Branch branch);

// Serves logits from a trace, keyed by (step, branch) of the query.
class ReplayBackend final : public ModelBackend {
 public:
  explicit ReplayBackend(const LogitsTrace& trace);
  // Also checks that the trace was captured against `session`.
  ReplayBackend(const LogitsTrace& trace, const Vocabulary& session);

  const Vocabulary& vocabulary() const override { return trace_.vocab; }
  LogitVector next_logits(const ModelQuery& query) override;

 private:
  const LogitsTrace& trace_;
};

// Forwards to another backend and appends every answer to a trace.
class RecordingBackend final : public ModelBackend {
 public:
  RecordingBackend(ModelBackend& inner, LogitsTrace& sink);

  const Vocabulary& vocabulary() const override { return inner_.vocabulary(); }
  LogitVector next_logits(const ModelQuery& query) override;

 private:
  ModelBackend& inner_;
  LogitsTrace& sink_;
};

}  // namespace ccd
