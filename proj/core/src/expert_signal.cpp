#include "ccd/expert_signal.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ccd/error.hpp"
#include "ccd/format.hpp"

namespace ccd {

void ClinicalLabelSet::validate() const {
  std::set<std::string_view> names;
  for (const auto& l : labels) {
    if (l.name.empty()) throw Error("clinical label with empty name");
    if (!(l.prob >= 0.0 && l.prob <= 1.0)) {
      throw Error("clinical label '" + l.name + "' has probability outside [0, 1]");
    }
    if (!names.insert(l.name).second) throw Error("duplicate clinical label '" + l.name + "'");
  }
}

PlausibilityConstraint PlausibilityConstraint::likelihood_ratio(double gamma) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw Error("gamma must be a finite value > 1");
  return PlausibilityConstraint(gamma);
}

double PlausibilityConstraint::max_bias() const {
  return gamma_ ? std::log(*gamma_) : std::numeric_limits<double>::infinity();
}

void BiasMap::add(TokenId id, double delta) {
  if (id < 0 || static_cast<std::size_t>(id) >= bias_.size()) {
    throw Error("bias map: token id " + std::to_string(id) + " outside vocabulary");
  }
  bias_[static_cast<std::size_t>(id)] += delta;
}

bool BiasMap::is_zero() const {
  return std::all_of(bias_.begin(), bias_.end(), [](double b) { return b == 0.0; });
}

ClinicalLabelSet filter_labels(const ClinicalLabelSet& labels, double tau) {
  ClinicalLabelSet out;
  for (const auto& l : labels.labels) {
    if (l.prob > tau) out.labels.push_back(l);
  }
  std::sort(out.labels.begin(), out.labels.end(), [](const ClinicalLabel& a, const ClinicalLabel& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.name < b.name;
  });
  return out;
}

std::string build_anchor_prompt(const ClinicalLabelSet& selected, std::string_view prefix) {
  if (selected.empty()) return {};
  std::string out(prefix);
  for (std::size_t i = 0; i < selected.labels.size(); ++i) {
    out += i == 0 ? " " : ", ";
    out += selected.labels[i].name;
  }
  return out;
}

double label_bias(double s) {
  if (std::isnan(s)) throw Error("label_bias: NaN probability");
  if (s < 0.0 || s > 1.0) throw Error("label_bias: probability outside [0, 1]");
  const double c = std::clamp(s, kProbEpsilon, 1.0 - kProbEpsilon);
  return std::log(c / (1.0 - c));
}

double clip_bias(double bias, const PlausibilityConstraint& constraint) {
  if (!constraint.enabled()) return bias;
  const double cap = constraint.max_bias();
  return std::clamp(bias, -cap, cap);
}

BiasMap build_bias_map(const ClinicalLabelSet& labels, const TokenMap& token_map,
                       const PlausibilityConstraint& constraint, std::size_t vocab_size) {
  BiasMap map(vocab_size);
  for (const auto& l : labels.labels) {
    const auto it = token_map.find(l.name);
    if (it == token_map.end()) throw Error("unmapped label '" + l.name + "'");
    const double b = clip_bias(label_bias(l.prob), constraint);
    for (TokenId id : it->second) map.add(id, b);
  }
  return map;
}

TokenMap read_token_map(std::istream& in) {
  TokenMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error("token map line " + std::to_string(lineno) + ": expected '<name>\\t<ids>'");
    }
    std::string name = line.substr(0, tab);
    std::vector<TokenId> ids;
    std::stringstream ss(line.substr(tab + 1));
    std::string field;
    while (std::getline(ss, field, ',')) {
      TokenId id = 0;
      if (!parse_int(field, id) || id < 0) {
        throw Error("token map line " + std::to_string(lineno) + ": bad token id '" + field + "'");
      }
      ids.push_back(id);
    }
    if (ids.empty()) throw Error("token map line " + std::to_string(lineno) + ": no token ids");
    if (!map.emplace(std::move(name), std::move(ids)).second) {
      throw Error("token map line " + std::to_string(lineno) + ": duplicate label");
    }
  }
  return map;
}

void write_token_map(std::ostream& out, const TokenMap& map) {
  for (const auto& [name, ids] : map) {
    out << name << '\t';
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
    out << '\n';
  }
}

ClinicalLabelSet read_label_set(std::istream& in) {
  ClinicalLabelSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      set.labels.push_back({j.at("name").get<std::string>(), j.at("prob").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error("label set line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  set.validate();
  return set;
}

void write_label_set(std::ostream& out, const ClinicalLabelSet& labels) {
  for (const auto& l : labels.labels) {
    out << "{\"name\":" << nlohmann::json(l.name).dump() << ",\"prob\":" << format_double(l.prob)
        << "}\n";
  }
}

}  // namespace ccd
