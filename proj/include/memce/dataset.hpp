#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "memce/util.hpp"

namespace memce {

/// One utterance element: a chunk (label NP/VP/PP/... with per-token POS
/// tags) or a bare token carrying its POS tag as label.
struct Element {
  enum class Kind { Chunk, Token };
  Kind kind = Kind::Token;
  std::string label;
  std::vector<std::string> pos;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// An anonymized entity span: its placeholder id (e.g. city_name#0) and the
/// token span it replaces.
struct AnonEntity {
  std::string placeholder;
  std::size_t start = 0;
  std::size_t length = 0;
};

struct Turn {
  std::vector<std::string> tokens;
  std::vector<Element> elements;
  std::vector<AnonEntity> anonymization;
  std::string gold_query;
  std::vector<std::string> phenomena;
};

struct InteractionRecord {
  std::string interaction_id;
  std::vector<Turn> turns;
};

inline constexpr const char* kDataFormat = "memce-data";
inline constexpr int kDataVersion = 1;

/// Dataset files are JSONL: a {format, version} header line followed by one
/// interaction object per line.
void write_dataset(std::ostream& out, const std::vector<InteractionRecord>& interactions);
void write_dataset_file(const std::string& path, const std::vector<InteractionRecord>& interactions);
std::vector<InteractionRecord> read_dataset(std::istream& in);
std::vector<InteractionRecord> read_dataset_file(const std::string& path);

}  // namespace memce
