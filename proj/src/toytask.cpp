#include "memce/toytask.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace memce {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Surface inventories
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::vector<std::string>> kCities = {
    {"chicago"}, {"seattle"}, {"boston"},  {"denver"},          {"atlanta"},
    {"dallas"},  {"memphis"}, {"oakland"}, {"long", "beach"},   {"salt", "lake", "city"}};

const std::vector<std::string> kAirlines = {"continental", "delta", "united", "american",
                                            "alaska"};

struct TimePoint {
  int minutes;
  std::vector<std::string> surface;
};

const std::vector<TimePoint> kTimes = {
    {360, {"6", "am"}},  {420, {"7", "am"}},  {480, {"8", "am"}},  {540, {"9", "am"}},
    {600, {"10", "am"}}, {660, {"11", "am"}}, {720, {"noon"}},     {780, {"1", "pm"}},
    {840, {"2", "pm"}},  {900, {"3", "pm"}},  {960, {"4", "pm"}},  {1020, {"5", "pm"}},
    {1080, {"6", "pm"}}, {1140, {"7", "pm"}}, {1200, {"8", "pm"}}};

const char* kOnes[] = {"",     "one", "two",   "three", "four", "five",
                       "six",  "seven", "eight", "nine",  "ten",  "eleven",
                       "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
                       "seventeen", "eighteen", "nineteen", "twenty"};

std::vector<std::string> day_words(int day) {
  if (day >= 1 && day <= 20) return {kOnes[day]};
  if (day > 20 && day < 30) return {"twenty", kOnes[day - 20]};
  if (day == 30) return {"thirty"};
  throw std::invalid_argument("day out of range");
}

std::string join(const std::vector<std::string>& tokens, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace

const std::vector<std::vector<std::string>>& ToyDatabase::city_surfaces() { return kCities; }
const std::vector<std::string>& ToyDatabase::airlines() { return kAirlines; }

ToyDatabase ToyDatabase::generate(std::uint64_t seed, std::size_t n_rows) {
  RandomSource rng(seed);
  ToyDatabase db;
  db.rows_.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    FlightRow row;
    row.flight_id = 100 + static_cast<int>(i);
    row.airline = kAirlines[rng.uniform_int(kAirlines.size())];
    const std::size_t from = rng.uniform_int(kCities.size());
    std::size_t to = rng.uniform_int(kCities.size() - 1);
    if (to >= from) ++to;
    row.from_city = join(kCities[from], "_");
    row.to_city = join(kCities[to], "_");
    row.departure_time = 300 + 15 * static_cast<int>(rng.uniform_int(65));  // 5:00..21:00
    row.date = 1 + static_cast<int>(rng.uniform_int(30));
    row.has_meal = rng.bernoulli(0.4);
    db.rows_.push_back(std::move(row));
  }
  return db;
}

void ToyDatabase::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << json{{"format", kDataFormat}, {"version", kDataVersion}}.dump() << "\n";
  json rows = json::array();
  for (const FlightRow& r : rows_) {
    rows.push_back({{"flight_id", r.flight_id},
                    {"airline", r.airline},
                    {"from_city", r.from_city},
                    {"to_city", r.to_city},
                    {"departure_time", r.departure_time},
                    {"date", r.date},
                    {"has_meal", r.has_meal}});
  }
  out << rows.dump() << "\n";
}

ToyDatabase ToyDatabase::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open database: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("database file is empty");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error&) {
    throw DataError("malformed database header");
  }
  if (header.value("format", "") != kDataFormat || header.value("version", -1) != kDataVersion)
    throw DataError("not a memce-data database file");
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json rows;
  try {
    rows = json::parse(rest);
  } catch (const json::parse_error&) {
    throw DataError("malformed database body");
  }
  ToyDatabase db;
  for (const json& j : rows) {
    FlightRow r;
    r.flight_id = j.at("flight_id").get<int>();
    r.airline = j.at("airline").get<std::string>();
    r.from_city = j.at("from_city").get<std::string>();
    r.to_city = j.at("to_city").get<std::string>();
    r.departure_time = j.at("departure_time").get<int>();
    r.date = j.at("date").get<int>();
    r.has_meal = j.at("has_meal").get<bool>();
    db.rows_.push_back(std::move(r));
  }
  return db;
}

// ---------------------------------------------------------------------------
// Query parsing / printing / execution
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kColumns = {"flight_id", "airline",        "from_city",
                                           "to_city",   "departure_time", "date",
                                           "has_meal"};

bool is_column(const std::string& s) {
  return std::find(kColumns.begin(), kColumns.end(), s) != kColumns.end();
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  try {
    out = std::stoi(s);
  } catch (...) {
    return false;
  }
  return true;
}

}  // namespace

std::optional<QueryAst> parse_query(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);

  std::size_t i = 0;
  auto next = [&]() -> const std::string* { return i < toks.size() ? &toks[i++] : nullptr; };

  const std::string* tok = next();
  if (tok == nullptr || *tok != "select") return std::nullopt;
  tok = next();
  if (tok == nullptr || !is_column(*tok)) return std::nullopt;
  QueryAst ast;
  ast.select_column = *tok;
  if (i == toks.size()) return ast;

  tok = next();
  if (*tok != "where") return std::nullopt;
  bool first = true;
  while (i < toks.size()) {
    if (!first) {
      tok = next();
      if (tok == nullptr || *tok != "and") return std::nullopt;
    }
    first = false;
    const std::string* attr = next();
    const std::string* op = next();
    const std::string* val = next();
    if (attr == nullptr || op == nullptr || val == nullptr) return std::nullopt;
    if (*attr == "airline" && *op == "=") {
      if (ast.airline) return std::nullopt;
      ast.airline = *val;
    } else if (*attr == "from_city" && *op == "=") {
      if (ast.from_city) return std::nullopt;
      ast.from_city = *val;
    } else if (*attr == "to_city" && *op == "=") {
      if (ast.to_city) return std::nullopt;
      ast.to_city = *val;
    } else if (*attr == "departure_time" && (*op == "<" || *op == ">")) {
      if (ast.departure) return std::nullopt;
      int minutes = 0;
      if (!parse_int(*val, minutes)) return std::nullopt;
      ast.departure = TimeConstraint{(*op)[0], minutes};
    } else if (*attr == "date" && *op == "=") {
      if (ast.date) return std::nullopt;
      int day = 0;
      if (!parse_int(*val, day)) return std::nullopt;
      ast.date = day;
    } else if (*attr == "has_meal" && *op == "=") {
      if (ast.has_meal) return std::nullopt;
      if (*val == "true")
        ast.has_meal = true;
      else if (*val == "false")
        ast.has_meal = false;
      else
        return std::nullopt;
    } else {
      return std::nullopt;
    }
  }
  return ast;
}

std::string print_query(const QueryAst& ast) {
  std::ostringstream out;
  out << "select " << ast.select_column;
  std::vector<std::string> clauses;
  if (ast.airline) clauses.push_back("airline = " + *ast.airline);
  if (ast.from_city) clauses.push_back("from_city = " + *ast.from_city);
  if (ast.to_city) clauses.push_back("to_city = " + *ast.to_city);
  if (ast.departure)
    clauses.push_back("departure_time " + std::string(1, ast.departure->op) + " " +
                      std::to_string(ast.departure->minutes));
  if (ast.date) clauses.push_back("date = " + std::to_string(*ast.date));
  if (ast.has_meal) clauses.push_back("has_meal = " + std::string(*ast.has_meal ? "true" : "false"));
  for (std::size_t c = 0; c < clauses.size(); ++c)
    out << (c == 0 ? " where " : " and ") << clauses[c];
  return out.str();
}

std::vector<std::string> execute_query(const QueryAst& ast, const ToyDatabase& db) {
  std::vector<std::string> out;
  for (const FlightRow& r : db.rows()) {
    if (ast.airline && r.airline != *ast.airline) continue;
    if (ast.from_city && r.from_city != *ast.from_city) continue;
    if (ast.to_city && r.to_city != *ast.to_city) continue;
    if (ast.departure) {
      if (ast.departure->op == '<' && !(r.departure_time < ast.departure->minutes)) continue;
      if (ast.departure->op == '>' && !(r.departure_time > ast.departure->minutes)) continue;
    }
    if (ast.date && r.date != *ast.date) continue;
    if (ast.has_meal && r.has_meal != *ast.has_meal) continue;

    if (ast.select_column == "flight_id")
      out.push_back(std::to_string(r.flight_id));
    else if (ast.select_column == "airline")
      out.push_back(r.airline);
    else if (ast.select_column == "from_city")
      out.push_back(r.from_city);
    else if (ast.select_column == "to_city")
      out.push_back(r.to_city);
    else if (ast.select_column == "departure_time")
      out.push_back(std::to_string(r.departure_time));
    else if (ast.select_column == "date")
      out.push_back(std::to_string(r.date));
    else if (ast.select_column == "has_meal")
      out.push_back(r.has_meal ? "true" : "false");
    else
      throw std::invalid_argument("unknown select column: " + ast.select_column);
  }
  return out;
}

std::optional<std::vector<std::string>> execute_query_text(const std::string& text,
                                                           const ToyDatabase& db) {
  std::optional<QueryAst> ast = parse_query(text);
  if (!ast) return std::nullopt;
  return execute_query(*ast, db);
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

bool query_match(const std::string& pred, const std::string& gold) {
  std::optional<QueryAst> p = parse_query(pred);
  std::optional<QueryAst> g = parse_query(gold);
  if (!g) throw DataError("reference query does not parse: " + gold);
  if (!p) return false;
  return print_query(*p) == print_query(*g);
}

double query_accuracy(std::span<const std::string> preds, std::span<const std::string> golds) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("query_accuracy: length mismatch");
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (query_match(preds[i], golds[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

bool denotation_match(const std::string& pred, const std::string& gold,
                      const ToyDatabase& db, DenotationMode mode) {
  std::optional<std::vector<std::string>> gold_result = execute_query_text(gold, db);
  if (!gold_result) throw DataError("reference query does not execute: " + gold);
  std::optional<std::vector<std::string>> pred_result = execute_query_text(pred, db);
  if (!pred_result)
    return mode == DenotationMode::Relaxed && gold_result->empty();
  std::vector<std::string> a = *pred_result, b = *gold_result;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

double denotation_accuracy(std::span<const std::string> preds,
                           std::span<const std::string> golds, const ToyDatabase& db,
                           DenotationMode mode) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("denotation_accuracy: length mismatch");
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (denotation_match(preds[i], golds[i], db, mode)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

InteractionMetrics interaction_metrics(const std::vector<std::vector<bool>>& per_interaction) {
  InteractionMetrics m;
  std::size_t turns = 0, correct_turns = 0, correct_interactions = 0;
  for (const std::vector<bool>& interaction : per_interaction) {
    bool all = true;
    for (bool ok : interaction) {
      ++turns;
      if (ok)
        ++correct_turns;
      else
        all = false;
    }
    if (all && !interaction.empty()) ++correct_interactions;
  }
  if (turns > 0) m.question_accuracy = static_cast<double>(correct_turns) / turns;
  if (!per_interaction.empty())
    m.interaction_accuracy =
        static_cast<double>(correct_interactions) / per_interaction.size();
  return m;
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

void PhenomenonMix::validate() const {
  const double vals[] = {extension, revision, focus_shift, ellipsis, independent};
  double sum = 0.0;
  for (double v : vals) {
    if (v < 0.0) throw std::invalid_argument("phenomenon mix proportions must be >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("phenomenon mix proportions must sum to 1");
}

PhenomenonMix PhenomenonMix::from_csv(const std::string& csv) {
  std::vector<double> vals;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (...) {
      throw std::invalid_argument("bad mix value: " + item);
    }
  }
  if (vals.size() != 5)
    throw std::invalid_argument(
        "mix wants 5 comma-separated proportions: extension,revision,focus_shift,ellipsis,independent");
  PhenomenonMix mix{vals[0], vals[1], vals[2], vals[3], vals[4]};
  mix.validate();
  return mix;
}

namespace {

// Constraint state carried across turns of one interaction.
struct ConstraintState {
  std::optional<std::size_t> airline;          // index into kAirlines
  std::optional<std::size_t> from, to;         // index into kCities
  std::optional<std::pair<char, std::size_t>> time;  // op, index into kTimes
  std::optional<int> date;                     // 1..30
  std::optional<bool> meal;
};

enum class Attr { Airline, From, To, Time, Date, Meal };

QueryAst state_to_ast(const ConstraintState& st, const std::string& select_column) {
  QueryAst ast;
  ast.select_column = select_column;
  if (st.airline) ast.airline = kAirlines[*st.airline];
  if (st.from) ast.from_city = join(kCities[*st.from], "_");
  if (st.to) ast.to_city = join(kCities[*st.to], "_");
  if (st.time) ast.departure = TimeConstraint{st.time->first, kTimes[st.time->second].minutes};
  if (st.date) ast.date = *st.date;
  if (st.meal) ast.has_meal = *st.meal;
  return ast;
}

// Incrementally assembles one turn's tokens, elements and anonymization map.
struct TurnBuilder {
  Turn turn;
  std::map<std::string, std::string>* placeholder_of_value;  // value -> placeholder
  std::size_t* city_count;
  std::size_t* airline_count;

  std::size_t pos() const { return turn.tokens.size(); }

  void chunk(const std::string& label, const std::vector<std::string>& tokens,
             const std::vector<std::string>& pos_tags) {
    Element e;
    e.kind = Element::Kind::Chunk;
    e.label = label;
    e.pos = pos_tags;
    e.start = pos();
    e.length = tokens.size();
    turn.elements.push_back(e);
    turn.tokens.insert(turn.tokens.end(), tokens.begin(), tokens.end());
  }

  void bare(const std::string& pos_tag, const std::string& token) {
    Element e;
    e.kind = Element::Kind::Token;
    e.label = pos_tag;
    e.pos = {pos_tag};
    e.start = pos();
    e.length = 1;
    turn.elements.push_back(e);
    turn.tokens.push_back(token);
  }

  std::string placeholder_for(const std::string& type, const std::string& value,
                              std::size_t* counter) {
    auto it = placeholder_of_value->find(type + ":" + value);
    if (it != placeholder_of_value->end()) return it->second;
    std::string name = type + "#" + std::to_string((*counter)++);
    placeholder_of_value->emplace(type + ":" + value, name);
    return name;
  }

  void city_np(std::size_t city_index) {
    const std::vector<std::string>& surface = kCities[city_index];
    const std::string value = join(surface, "_");
    const std::string placeholder = placeholder_for("city_name", value, city_count);
    turn.anonymization.push_back({placeholder, pos(), surface.size()});
    chunk("NP", surface, std::vector<std::string>(surface.size(), "NNP"));
  }

  void airline_token_entity(std::size_t airline_index) {
    const std::string& value = kAirlines[airline_index];
    const std::string placeholder = placeholder_for("airline_name", value, airline_count);
    turn.anonymization.push_back({placeholder, pos(), 1});
  }
};

void add_from_phrase(TurnBuilder& b, std::size_t city) {
  b.chunk("PP", {"from"}, {"IN"});
  b.city_np(city);
}

void add_to_phrase(TurnBuilder& b, std::size_t city) {
  b.chunk("PP", {"to"}, {"IN"});
  b.city_np(city);
}

void add_time_phrase(TurnBuilder& b, char op, std::size_t time_index) {
  b.chunk("PP", {op == '<' ? "before" : "after"}, {"IN"});
  const TimePoint& tp = kTimes[time_index];
  b.chunk("NP", tp.surface, std::vector<std::string>(tp.surface.size(), "CD"));
}

void add_date_phrase(TurnBuilder& b, int day) {
  b.chunk("PP", {"on"}, {"IN"});
  std::vector<std::string> words = day_words(day);
  std::vector<std::string> tokens = {"day"};
  tokens.insert(tokens.end(), words.begin(), words.end());
  b.chunk("NP", tokens, std::vector<std::string>(tokens.size(), "NN"));
}

void add_meal_phrase(TurnBuilder& b, bool has_meal) {
  b.chunk("PP", {"with"}, {"IN"});
  b.chunk("NP", {has_meal ? "a" : "no", "meal"}, {"DT", "NN"});
}

void add_airline_phrase(TurnBuilder& b, std::size_t airline) {
  b.chunk("PP", {"on"}, {"IN"});
  b.airline_token_entity(airline);
  b.chunk("NP", {kAirlines[airline]}, {"NNP"});
}

void add_constraint_phrase(TurnBuilder& b, Attr attr, const ConstraintState& st) {
  switch (attr) {
    case Attr::Airline: add_airline_phrase(b, *st.airline); break;
    case Attr::From: add_from_phrase(b, *st.from); break;
    case Attr::To: add_to_phrase(b, *st.to); break;
    case Attr::Time: add_time_phrase(b, st.time->first, st.time->second); break;
    case Attr::Date: add_date_phrase(b, *st.date); break;
    case Attr::Meal: add_meal_phrase(b, *st.meal); break;
  }
}

const std::vector<std::string> kVerbs = {"show", "list", "find"};

// "show all continental flights from chicago to seattle ..."
void build_independent(TurnBuilder& b, RandomSource& rng, ConstraintState& st) {
  ConstraintState fresh;
  fresh.from = rng.uniform_int(kCities.size());
  fresh.to = rng.uniform_int(kCities.size() - 1);
  if (*fresh.to >= *fresh.from) ++*fresh.to;
  if (rng.bernoulli(0.7)) fresh.airline = rng.uniform_int(kAirlines.size());
  if (rng.bernoulli(0.35))
    fresh.time = std::make_pair(rng.bernoulli(0.5) ? '<' : '>', rng.uniform_int(kTimes.size()));
  if (rng.bernoulli(0.3)) fresh.date = 1 + static_cast<int>(rng.uniform_int(30));
  if (rng.bernoulli(0.2)) fresh.meal = rng.bernoulli(0.5);
  st = fresh;

  b.chunk("VP", {kVerbs[rng.uniform_int(kVerbs.size())]}, {"VB"});
  std::vector<std::string> np = {"all"};
  std::vector<std::string> np_pos = {"DT"};
  if (st.airline) {
    const std::string& value = kAirlines[*st.airline];
    b.turn.anonymization.push_back(
        {b.placeholder_for("airline_name", value, b.airline_count), b.pos() + np.size(), 1});
    np.push_back(value);
    np_pos.push_back("NNP");
  }
  np.push_back("flights");
  np_pos.push_back("NNS");
  b.chunk("NP", np, np_pos);
  add_from_phrase(b, *st.from);
  add_to_phrase(b, *st.to);
  if (st.time) add_time_phrase(b, st.time->first, st.time->second);
  if (st.date) add_date_phrase(b, *st.date);
  if (st.meal) add_meal_phrase(b, *st.meal);
}

std::vector<Attr> unconstrained(const ConstraintState& st) {
  std::vector<Attr> out;
  if (!st.airline) out.push_back(Attr::Airline);
  if (!st.time) out.push_back(Attr::Time);
  if (!st.date) out.push_back(Attr::Date);
  if (!st.meal) out.push_back(Attr::Meal);
  return out;
}

std::vector<Attr> revisable(const ConstraintState& st) {
  std::vector<Attr> out;
  if (st.airline) out.push_back(Attr::Airline);
  if (st.from) out.push_back(Attr::From);
  if (st.to) out.push_back(Attr::To);
  if (st.time) out.push_back(Attr::Time);
  if (st.date) out.push_back(Attr::Date);
  if (st.meal) out.push_back(Attr::Meal);
  return out;
}

Attr set_new_constraint(RandomSource& rng, ConstraintState& st) {
  std::vector<Attr> candidates = unconstrained(st);
  Attr attr = candidates[rng.uniform_int(candidates.size())];
  switch (attr) {
    case Attr::Airline: st.airline = rng.uniform_int(kAirlines.size()); break;
    case Attr::Time:
      st.time = std::make_pair(rng.bernoulli(0.5) ? '<' : '>', rng.uniform_int(kTimes.size()));
      break;
    case Attr::Date: st.date = 1 + static_cast<int>(rng.uniform_int(30)); break;
    case Attr::Meal: st.meal = rng.bernoulli(0.5); break;
    default: break;
  }
  return attr;
}

Attr revise_constraint(RandomSource& rng, ConstraintState& st) {
  std::vector<Attr> candidates = revisable(st);
  Attr attr = candidates[rng.uniform_int(candidates.size())];
  switch (attr) {
    case Attr::Airline: {
      std::size_t next = rng.uniform_int(kAirlines.size() - 1);
      if (next >= *st.airline) ++next;
      st.airline = next;
      break;
    }
    case Attr::From: {
      std::size_t next = rng.uniform_int(kCities.size() - 1);
      if (next >= *st.from) ++next;
      if (st.to && next == *st.to) next = (next + 1) % kCities.size();
      if (next == *st.from) next = (next + 1) % kCities.size();
      st.from = next;
      break;
    }
    case Attr::To: {
      std::size_t next = rng.uniform_int(kCities.size() - 1);
      if (next >= *st.to) ++next;
      if (st.from && next == *st.from) next = (next + 1) % kCities.size();
      if (next == *st.to) next = (next + 1) % kCities.size();
      st.to = next;
      break;
    }
    case Attr::Time: {
      std::size_t next = rng.uniform_int(kTimes.size() - 1);
      if (next >= st.time->second) ++next;
      st.time = std::make_pair(st.time->first, next);
      break;
    }
    case Attr::Date: {
      int next = 1 + static_cast<int>(rng.uniform_int(29));
      if (next >= *st.date) ++next;
      st.date = next;
      break;
    }
    case Attr::Meal: st.meal = !*st.meal; break;
  }
  return attr;
}

struct FocusTemplate {
  const char* column;
  std::vector<const char*> tokens;
};

void build_focus(TurnBuilder& b, RandomSource& rng, std::string& select_column) {
  const std::size_t pick = rng.uniform_int(4);
  switch (pick) {
    case 0:
      select_column = "airline";
      b.chunk("NP", {"which", "airlines"}, {"WDT", "NNS"});
      b.bare("VBP", "are");
      b.chunk("NP", {"these"}, {"DT"});
      break;
    case 1:
      select_column = "from_city";
      b.chunk("ADVP", {"where"}, {"WRB"});
      b.bare("VBP", "do");
      b.chunk("NP", {"they"}, {"PRP"});
      b.bare("VB", "leave");
      b.chunk("PP", {"from"}, {"IN"});
      break;
    case 2:
      select_column = "to_city";
      b.chunk("ADVP", {"where"}, {"WRB"});
      b.bare("VBP", "do");
      b.chunk("NP", {"they"}, {"PRP"});
      b.bare("VB", "go");
      break;
    default:
      select_column = "date";
      b.chunk("PP", {"on"}, {"IN"});
      b.chunk("NP", {"which", "days"}, {"WDT", "NNS"});
      b.bare("VBP", "do");
      b.chunk("NP", {"they"}, {"PRP"});
      b.bare("VB", "fly");
      break;
  }
}

}  // namespace

TaskInventory toytask_token_inventory() {
  TaskInventory inv;
  auto add_in = [&](const std::string& t) { inv.input_tokens.push_back(t); };

  for (const std::string& v : kVerbs) add_in(v);
  for (const char* t : {"all", "flights", "ones", "from", "to", "before", "after", "on",
                        "with", "a", "no", "meal", "day"})
    add_in(t);
  for (const auto& city : kCities)
    for (const std::string& tok : city) add_in(tok);
  for (const std::string& a : kAirlines) add_in(a);
  for (const TimePoint& tp : kTimes)
    for (const std::string& tok : tp.surface) add_in(tok);
  for (int d = 1; d <= 30; ++d)
    for (const std::string& w : day_words(d)) add_in(w);
  for (const char* t : {"which", "airlines", "are", "these", "where", "do", "they", "leave",
                        "go", "days", "fly"})
    add_in(t);

  auto add_out = [&](const std::string& t) { inv.output_tokens.push_back(t); };
  for (const char* t : {"select", "where", "and", "=", "<", ">"}) add_out(t);
  for (const std::string& c : kColumns) add_out(c);
  for (const std::string& a : kAirlines) add_out(a);
  for (const auto& city : kCities) add_out(join(city, "_"));
  for (const TimePoint& tp : kTimes) add_out(std::to_string(tp.minutes));
  for (int d = 1; d <= 30; ++d) add_out(std::to_string(d));
  add_out("true");
  add_out("false");

  for (std::size_t i = 0; i < kCities.size(); ++i)
    inv.placeholders.push_back("city_name#" + std::to_string(i));
  for (std::size_t i = 0; i < kAirlines.size(); ++i)
    inv.placeholders.push_back("airline_name#" + std::to_string(i));
  // placeholder names also occur as (anonymized) input tokens
  for (const std::string& p : inv.placeholders) add_in(p);
  return inv;
}

std::vector<InteractionRecord> generate_dataset(std::uint64_t seed, std::size_t n_interactions,
                                                const PhenomenonMix& mix,
                                                const std::string& id_prefix) {
  mix.validate();
  RandomSource rng(seed);
  std::vector<InteractionRecord> out;
  out.reserve(n_interactions);

  for (std::size_t n = 0; n < n_interactions; ++n) {
    InteractionRecord rec;
    {
      std::ostringstream id;
      id << id_prefix;
      id.width(6);
      id.fill('0');
      id << n;
      rec.interaction_id = id.str();
    }

    std::map<std::string, std::string> placeholder_of_value;
    std::size_t city_count = 0, airline_count = 0;
    ConstraintState st;
    const std::size_t n_turns = 2 + rng.uniform_int(7);  // 2..8

    for (std::size_t turn_idx = 0; turn_idx < n_turns; ++turn_idx) {
      TurnBuilder b;
      b.placeholder_of_value = &placeholder_of_value;
      b.city_count = &city_count;
      b.airline_count = &airline_count;
      std::string select_column = "flight_id";

      if (turn_idx == 0) {
        build_independent(b, rng, st);
        b.turn.phenomena = {"independent"};
      } else {
        // draw a phenomenon, falling back to revision when the draw needs an
        // attribute class that is unavailable
        double r = rng.uniform();
        std::string phen;
        if ((r -= mix.extension) < 0)
          phen = "extension";
        else if ((r -= mix.revision) < 0)
          phen = "revision";
        else if ((r -= mix.focus_shift) < 0)
          phen = "focus_shift";
        else if ((r -= mix.ellipsis) < 0)
          phen = "ellipsis";
        else
          phen = "independent";
        if ((phen == "extension" || phen == "ellipsis") && unconstrained(st).empty())
          phen = "revision";

        if (phen == "independent") {
          build_independent(b, rng, st);
          b.turn.phenomena = {"independent"};
        } else if (phen == "extension") {
          Attr attr = set_new_constraint(rng, st);
          b.chunk("VP", {kVerbs[rng.uniform_int(kVerbs.size())]}, {"VB"});
          b.chunk("NP", {"ones"}, {"NNS"});
          add_constraint_phrase(b, attr, st);
          b.turn.phenomena = {"extension"};
        } else if (phen == "revision") {
          Attr attr = revise_constraint(rng, st);
          add_constraint_phrase(b, attr, st);
          b.turn.phenomena = {"revision"};
        } else if (phen == "ellipsis") {
          Attr attr = set_new_constraint(rng, st);
          add_constraint_phrase(b, attr, st);
          b.turn.phenomena = {"ellipsis"};
        } else {  // focus_shift
          build_focus(b, rng, select_column);
          b.turn.phenomena = {"focus_shift", "coreference"};
        }
      }

      b.turn.gold_query = print_query(state_to_ast(st, select_column));
      rec.turns.push_back(std::move(b.turn));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace memce
