#include "memce/dataset.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace memce {

using nlohmann::json;

namespace {

json turn_to_json(const Turn& turn) {
  json elements = json::array();
  for (const Element& e : turn.elements) {
    elements.push_back({{"kind", e.kind == Element::Kind::Chunk ? "chunk" : "token"},
                        {"label", e.label},
                        {"pos", e.pos},
                        {"span", {e.start, e.length}}});
  }
  json anonymization = json::array();
  for (const AnonEntity& a : turn.anonymization)
    anonymization.push_back({{"placeholder", a.placeholder}, {"span", {a.start, a.length}}});
  return {{"tokens", turn.tokens},
          {"elements", elements},
          {"anonymization", anonymization},
          {"gold_query", turn.gold_query},
          {"phenomena", turn.phenomena}};
}

Turn turn_from_json(const json& j) {
  Turn turn;
  turn.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (const json& je : j.at("elements")) {
    Element e;
    const std::string kind = je.at("kind").get<std::string>();
    if (kind == "chunk")
      e.kind = Element::Kind::Chunk;
    else if (kind == "token")
      e.kind = Element::Kind::Token;
    else
      throw DataError("unknown element kind: " + kind);
    e.label = je.at("label").get<std::string>();
    e.pos = je.at("pos").get<std::vector<std::string>>();
    e.start = je.at("span").at(0).get<std::size_t>();
    e.length = je.at("span").at(1).get<std::size_t>();
    turn.elements.push_back(std::move(e));
  }
  for (const json& ja : j.at("anonymization")) {
    AnonEntity a;
    a.placeholder = ja.at("placeholder").get<std::string>();
    a.start = ja.at("span").at(0).get<std::size_t>();
    a.length = ja.at("span").at(1).get<std::size_t>();
    turn.anonymization.push_back(std::move(a));
  }
  turn.gold_query = j.at("gold_query").get<std::string>();
  turn.phenomena = j.at("phenomena").get<std::vector<std::string>>();
  return turn;
}

}  // namespace

void write_dataset(std::ostream& out, const std::vector<InteractionRecord>& interactions) {
  out << json{{"format", kDataFormat}, {"version", kDataVersion}}.dump() << "\n";
  for (const InteractionRecord& rec : interactions) {
    json turns = json::array();
    for (const Turn& t : rec.turns) turns.push_back(turn_to_json(t));
    out << json{{"interaction_id", rec.interaction_id}, {"turns", turns}}.dump() << "\n";
  }
}

void write_dataset_file(const std::string& path, const std::vector<InteractionRecord>& interactions) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  write_dataset(out, interactions);
}

std::vector<InteractionRecord> read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("dataset is empty, missing header");
  ++line_no;
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error&) {
    throw DataError("malformed JSON on line 1");
  }
  if (header.value("format", "") != kDataFormat)
    throw DataError("not a memce-data file (bad header)");
  if (header.value("version", -1) != kDataVersion)
    throw DataError("unsupported memce-data version");

  std::vector<InteractionRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw DataError("malformed JSON on line " + std::to_string(line_no));
    }
    try {
      InteractionRecord rec;
      rec.interaction_id = j.at("interaction_id").get<std::string>();
      for (const json& jt : j.at("turns")) rec.turns.push_back(turn_from_json(jt));
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw DataError("bad interaction record on line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return out;
}

std::vector<InteractionRecord> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);
  return read_dataset(in);
}

}  // namespace memce
