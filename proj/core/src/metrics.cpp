#include "ccd/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "ccd/error.hpp"

namespace ccd {

namespace {

bool is_mark(char c) { return c == '.' || c == ',' || c == ':' || c == ';'; }

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_mark(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

std::vector<bool> extract_mentions(std::string_view text, const std::vector<std::string>& ontology) {
  std::vector<std::vector<std::string>> names;
  names.reserve(ontology.size());
  for (const auto& n : ontology) names.push_back(split_words(n));

  const auto words = split_words(text);
  std::vector<bool> out(ontology.size(), false);
  bool negated = false;
  std::size_t i = 0;
  while (i < words.size()) {
    if (words[i] == ".") {
      negated = false;
      ++i;
      continue;
    }
    if (words[i] == "no") {
      negated = true;
      ++i;
      continue;
    }
    // Longest ontology name starting here.
    std::size_t best = ontology.size();
    std::size_t best_len = 0;
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& n = names[k];
      if (n.size() <= best_len || i + n.size() > words.size()) continue;
      if (std::equal(n.begin(), n.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
        best = k;
        best_len = n.size();
      }
    }
    if (best_len == 0) {
      ++i;
      continue;
    }
    if (!negated) out[best] = true;
    i += best_len;
  }
  return out;
}

SymptomScore symptom_prf(const std::vector<bool>& pred, const std::vector<bool>& truth) {
  if (pred.size() != truth.size()) throw Error("symptom_prf: vector length mismatch");
  SymptomScore s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && truth[i]) ++s.tp;
    else if (pred[i]) ++s.fp;
    else if (truth[i]) ++s.fn;
    else ++s.tn;
  }
  if (s.tp + s.fp + s.fn == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  s.precision = ratio(s.tp, s.tp + s.fp);
  s.recall = ratio(s.tp, s.tp + s.fn);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

double rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  std::vector<std::size_t> prev(reference.size() + 1, 0), cur(reference.size() + 1, 0);
  for (const auto& c : candidate) {
    for (std::size_t j = 1; j <= reference.size(); ++j) {
      cur[j] = c == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const std::size_t lcs = prev[reference.size()];
  if (lcs == 0) return 0.0;
  const double p = ratio(lcs, candidate.size());
  const double r = ratio(lcs, reference.size());
  return harmonic(p, r);
}

EpisodeResult score_episode(std::uint64_t case_id, std::string generated, std::string reference,
                            std::vector<bool> truth, std::size_t tokens,
                            const std::vector<std::string>& ontology) {
  EpisodeResult r;
  r.case_id = case_id;
  r.predicted = extract_mentions(generated, ontology);
  const SymptomScore s = symptom_prf(r.predicted, truth);
  r.tp = s.tp;
  r.fp = s.fp;
  r.fn = s.fn;
  r.tn = s.tn;
  r.rouge_l = rouge_l(split_words(generated), split_words(reference));
  r.generated = std::move(generated);
  r.reference = std::move(reference);
  r.truth = std::move(truth);
  r.tokens = tokens;
  return r;
}

AggregateReport aggregate(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw Error("aggregate: no episodes");
  std::vector<const EpisodeResult*> order;
  for (const auto& r : results) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const EpisodeResult* a, const EpisodeResult* b) {
    if (a->case_id != b->case_id) return a->case_id < b->case_id;
    return a->rouge_l < b->rouge_l;
  });
  AggregateReport a;
  double rouge_sum = 0.0;
  std::size_t token_sum = 0;
  for (const auto* r : order) {
    a.tp += r->tp;
    a.fp += r->fp;
    a.fn += r->fn;
    a.tn += r->tn;
    rouge_sum += r->rouge_l;
    token_sum += r->tokens;
  }
  a.episodes = results.size();
  a.precision = ratio(a.tp, a.tp + a.fp);
  a.recall = ratio(a.tp, a.tp + a.fn);
  a.f1 = harmonic(a.precision, a.recall);
  a.fp_rate = ratio(a.fp, a.fp + a.tn);
  a.fn_rate = ratio(a.fn, a.fn + a.tp);
  a.rouge_l = rouge_sum / static_cast<double>(a.episodes);
  a.mean_tokens = static_cast<double>(token_sum) / static_cast<double>(a.episodes);
  return a;
}

}  // namespace ccd
