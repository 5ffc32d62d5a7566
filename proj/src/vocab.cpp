#include "memce/vocab.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace memce {

std::vector<std::string> anonymized_tokens(const Turn& turn) {
  std::vector<std::string> out = turn.tokens;
  for (const AnonEntity& a : turn.anonymization) {
    if (a.start + a.length > out.size())
      throw DataError("anonymization span outside utterance: " + a.placeholder);
    for (std::size_t i = 0; i < a.length; ++i) out[a.start + i] = a.placeholder;
  }
  return out;
}

std::vector<std::string> split_query(const std::string& query) {
  std::vector<std::string> out;
  std::istringstream in(query);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string entity_value(const Turn& turn, const AnonEntity& entity) {
  std::string value;
  for (std::size_t i = 0; i < entity.length; ++i) {
    if (i > 0) value += "_";
    value += turn.tokens.at(entity.start + i);
  }
  return value;
}

Vocabulary Vocabulary::build(const std::vector<InteractionRecord>& data) {
  std::set<std::string> in_set, out_set, ph_set;
  for (const InteractionRecord& rec : data) {
    for (const Turn& turn : rec.turns) {
      for (const std::string& tok : anonymized_tokens(turn)) in_set.insert(tok);
      for (const std::string& tok : split_query(turn.gold_query)) out_set.insert(tok);
      for (const AnonEntity& a : turn.anonymization) ph_set.insert(a.placeholder);
    }
  }
  Vocabulary v;
  v.input_tokens_.push_back(kUnk);
  v.input_tokens_.insert(v.input_tokens_.end(), in_set.begin(), in_set.end());
  v.output_tokens_.push_back(kSos);
  v.output_tokens_.push_back(kEos);
  v.output_tokens_.insert(v.output_tokens_.end(), out_set.begin(), out_set.end());
  v.placeholder_names_.assign(ph_set.begin(), ph_set.end());
  v.index();
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& input_tokens,
                                   const std::vector<std::string>& output_tokens,
                                   const std::vector<std::string>& placeholders) {
  std::set<std::string> in_set(input_tokens.begin(), input_tokens.end());
  std::set<std::string> out_set(output_tokens.begin(), output_tokens.end());
  std::set<std::string> ph_set(placeholders.begin(), placeholders.end());
  Vocabulary v;
  v.input_tokens_.push_back(kUnk);
  v.input_tokens_.insert(v.input_tokens_.end(), in_set.begin(), in_set.end());
  v.output_tokens_.push_back(kSos);
  v.output_tokens_.push_back(kEos);
  v.output_tokens_.insert(v.output_tokens_.end(), out_set.begin(), out_set.end());
  v.placeholder_names_.assign(ph_set.begin(), ph_set.end());
  v.index();
  return v;
}

void Vocabulary::index() {
  input_ids_.clear();
  for (std::size_t i = 0; i < input_tokens_.size(); ++i) input_ids_[input_tokens_[i]] = i;
  output_ids_.clear();
  for (std::size_t i = 0; i < output_tokens_.size(); ++i) output_ids_[output_tokens_[i]] = i;
  placeholder_ids_.clear();
  for (std::size_t i = 0; i < placeholder_names_.size(); ++i)
    placeholder_ids_[placeholder_names_[i]] = i;
  unk_id_ = input_ids_.at(kUnk);
  sos_id_ = output_ids_.at(kSos);
  eos_id_ = output_ids_.at(kEos);
}

std::size_t Vocabulary::input_id(const std::string& token) const {
  auto it = input_ids_.find(token);
  return it == input_ids_.end() ? unk_id_ : it->second;
}

std::size_t Vocabulary::output_id(const std::string& token) const {
  auto it = output_ids_.find(token);
  if (it == output_ids_.end()) throw DataError("token not in output vocabulary: " + token);
  return it->second;
}

const std::string& Vocabulary::output_token(std::size_t id) const {
  if (id >= output_tokens_.size()) throw std::invalid_argument("output token id out of range");
  return output_tokens_[id];
}

std::size_t Vocabulary::placeholder_row(const std::string& name) const {
  if (placeholder_names_.empty())
    throw std::invalid_argument("vocabulary has no placeholder rows");
  auto it = placeholder_ids_.find(name);
  return it == placeholder_ids_.end() ? placeholder_names_.size() - 1 : it->second;
}

std::string Vocabulary::to_json_string() const {
  nlohmann::json j{{"input", input_tokens_},
                   {"output", output_tokens_},
                   {"placeholders", placeholder_names_}};
  return j.dump();
}

Vocabulary Vocabulary::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Vocabulary v;
  v.input_tokens_ = j.at("input").get<std::vector<std::string>>();
  v.output_tokens_ = j.at("output").get<std::vector<std::string>>();
  v.placeholder_names_ = j.at("placeholders").get<std::vector<std::string>>();
  v.index();
  return v;
}

void PlaceholderScope::add_turn(const Turn& turn) {
  for (const AnonEntity& a : turn.anonymization) {
    if (index_.count(a.placeholder)) continue;
    index_[a.placeholder] = names_.size();
    names_.push_back(a.placeholder);
    values_.push_back(entity_value(turn, a));
  }
}

std::size_t PlaceholderScope::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? names_.size() : it->second;
}

}  // namespace memce
