#pragma once

#include <map>
#include <string>
#include <vector>

#include "memce/dataset.hpp"

namespace memce {

/// Input tokens of a turn with every anonymized entity span replaced by its
/// placeholder name (one placeholder token per covered position).
std::vector<std::string> anonymized_tokens(const Turn& turn);

/// Whitespace-split query tokens.
std::vector<std::string> split_query(const std::string& query);

/// The surface value a placeholder de-anonymizes to: the entity's tokens
/// joined with underscores (matching the query value convention).
std::string entity_value(const Turn& turn, const AnonEntity& entity);

/// Token <-> id maps for the encoder input, the decoder output vocabulary,
/// and the reserved placeholder embedding rows.
class Vocabulary {
 public:
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kSos = "<s>";
  static constexpr const char* kEos = "</s>";

  static Vocabulary build(const std::vector<InteractionRecord>& data);
  /// Builds from explicit closed token inventories (deduplicated).
  static Vocabulary from_tokens(const std::vector<std::string>& input_tokens,
                                const std::vector<std::string>& output_tokens,
                                const std::vector<std::string>& placeholders);

  std::size_t input_size() const { return input_tokens_.size(); }
  std::size_t output_size() const { return output_tokens_.size(); }
  std::size_t placeholder_rows() const { return placeholder_names_.size(); }

  /// Unknown input tokens map to the reserved UNK id.
  std::size_t input_id(const std::string& token) const;
  /// Unknown output tokens are a data contract violation.
  std::size_t output_id(const std::string& token) const;
  bool has_output(const std::string& token) const { return output_ids_.count(token) > 0; }
  const std::string& output_token(std::size_t id) const;

  /// Embedding row (within the placeholder block) for a placeholder name.
  /// Unseen names share the last reserved row.
  std::size_t placeholder_row(const std::string& name) const;

  std::size_t unk_id() const { return unk_id_; }
  std::size_t sos_id() const { return sos_id_; }
  std::size_t eos_id() const { return eos_id_; }

  // checkpoint serialization
  std::string to_json_string() const;
  static Vocabulary from_json_string(const std::string& text);

 private:
  std::vector<std::string> input_tokens_;
  std::map<std::string, std::size_t> input_ids_;
  std::vector<std::string> output_tokens_;
  std::map<std::string, std::size_t> output_ids_;
  std::vector<std::string> placeholder_names_;
  std::map<std::string, std::size_t> placeholder_ids_;
  std::size_t unk_id_ = 0, sos_id_ = 0, eos_id_ = 0;

  void index();
};

/// Placeholders visible at some turn: every placeholder from the
/// interaction's earlier turns (and the current one), in first-appearance
/// order. The output distribution's anonymized block follows this order.
class PlaceholderScope {
 public:
  /// Extends the scope with a turn's anonymization map.
  void add_turn(const Turn& turn);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& values() const { return values_; }
  /// Index of a placeholder within the scope, or size() when absent.
  std::size_t index_of(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::string> values_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace memce
