#include "ccd/world.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "ccd/error.hpp"
#include "ccd/format.hpp"

namespace ccd {

void WorldParams::validate() const {
  if (n_symptoms == 0) throw Error("world: n_symptoms must be >= 1");
  if (prevalence.size() != n_symptoms) throw Error("world: prevalence must have n_symptoms entries");
  for (double p : prevalence) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("world: prevalence outside [0, 1]");
  }
  auto unit = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string("world: ") + what + " outside [0, 1]");
  };
  unit(distractor_rate, "distractor_rate");
  unit(fn_bias, "fn_bias");
  unit(fp_bias, "fp_bias");
}

void WorldParams::set_uniform_prevalence(double p) { prevalence.assign(n_symptoms, p); }

std::size_t LatentCase::present_count() const {
  return static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
}

std::vector<TokenId> base_prompt(const ToyLexicon& lex) {
  return {lex.image, lex.describe, lex.the, lex.findings_word, lex.period};
}

LatentCase sample_case(const WorldParams& params, const ToyLexicon& lex, Rng& rng, std::uint64_t id) {
  params.validate();
  if (lex.symptom_ids.size() != params.n_symptoms) {
    throw Error("world: lexicon ontology size differs from n_symptoms");
  }
  LatentCase c;
  c.id = id;
  c.truth.resize(params.n_symptoms);
  c.severity.resize(params.n_symptoms);
  for (std::size_t i = 0; i < params.n_symptoms; ++i) {
    const bool present = rng.uniform() < params.prevalence[i];
    const double u = rng.uniform();
    c.truth[i] = present;
    // 1 - u lies in (0, 1], so both intervals are half-open on the left.
    c.severity[i] = present ? 0.5 + 0.5 * (1.0 - u) : 0.5 * (1.0 - u);
  }
  c.prompt = base_prompt(lex);
  const bool distract = rng.uniform() < params.distractor_rate;
  std::vector<std::size_t> absent;
  for (std::size_t i = 0; i < params.n_symptoms; ++i) {
    if (!c.truth[i]) absent.push_back(i);
  }
  const double pick = rng.uniform();
  if (distract && !absent.empty()) {
    const auto k = std::min(absent.size() - 1, static_cast<std::size_t>(pick * absent.size()));
    c.distractor = absent[k];
    c.prompt.insert(c.prompt.end(),
                    {lex.history, lex.suspected, lex.symptom_ids[absent[k]], lex.period});
  }
  return c;
}

std::string reference_report(const LatentCase& c, const std::vector<std::string>& ontology) {
  if (c.truth.size() != ontology.size()) throw Error("reference_report: ontology size mismatch");
  std::string out = "Findings:";
  bool any = false;
  for (std::size_t i = 0; i < ontology.size(); ++i) {
    if (!c.truth[i]) continue;
    out += any ? ", " : " ";
    out += ontology[i];
    any = true;
  }
  out += any ? "." : " no acute findings.";
  return out;
}

void write_case(std::ostream& out, const LatentCase& c) {
  out << "{\"id\":" << c.id << ",\"truth\":[";
  for (std::size_t i = 0; i < c.truth.size(); ++i) out << (i ? "," : "") << (c.truth[i] ? 1 : 0);
  out << "],\"severity\":[";
  for (std::size_t i = 0; i < c.severity.size(); ++i) {
    out << (i ? "," : "") << format_double(c.severity[i]);
  }
  out << "],\"prompt\":[";
  for (std::size_t i = 0; i < c.prompt.size(); ++i) out << (i ? "," : "") << c.prompt[i];
  out << "],\"distractor\":";
  if (c.distractor) {
    out << *c.distractor;
  } else {
    out << "null";
  }
  out << "}\n";
}

LatentCase read_case(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    LatentCase c;
    c.id = j.at("id").get<std::uint64_t>();
    for (int t : j.at("truth").get<std::vector<int>>()) c.truth.push_back(t != 0);
    c.severity = j.at("severity").get<std::vector<double>>();
    c.prompt = j.at("prompt").get<std::vector<TokenId>>();
    if (!j.at("distractor").is_null()) c.distractor = j.at("distractor").get<std::size_t>();
    if (c.truth.size() != c.severity.size()) throw Error("case: truth/severity length mismatch");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("case record: ") + e.what());
  }
}

}  // namespace ccd
