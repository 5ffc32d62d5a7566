#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memce/dataset.hpp"

namespace memce {

// ---------------------------------------------------------------------------
// Database
// ---------------------------------------------------------------------------

struct FlightRow {
  int flight_id = 0;
  std::string airline;
  std::string from_city;
  std::string to_city;
  int departure_time = 0;  // minutes since midnight
  int date = 1;            // day index, 1..30
  bool has_meal = false;
};

/// One FLIGHTS table with deterministic contents from a seed.
class ToyDatabase {
 public:
  static ToyDatabase generate(std::uint64_t seed, std::size_t n_rows = 400);

  const std::vector<FlightRow>& rows() const { return rows_; }

  void save(const std::string& path) const;
  static ToyDatabase load(const std::string& path);

  static const std::vector<std::vector<std::string>>& city_surfaces();
  static const std::vector<std::string>& airlines();

 private:
  std::vector<FlightRow> rows_;
};

// ---------------------------------------------------------------------------
// Query language: a flat conjunction over the FLIGHTS attributes
// ---------------------------------------------------------------------------

struct TimeConstraint {
  char op = '<';  // '<' or '>'
  int minutes = 0;
  bool operator==(const TimeConstraint&) const = default;
};

struct QueryAst {
  std::string select_column = "flight_id";
  std::optional<std::string> airline;
  std::optional<std::string> from_city;
  std::optional<std::string> to_city;
  std::optional<TimeConstraint> departure;
  std::optional<int> date;
  std::optional<bool> has_meal;
  bool operator==(const QueryAst&) const = default;
};

/// Parses "select <col> [where <attr> <op> <val> [and ...]]". Returns nullopt
/// on malformed input (unknown column/attribute, bad operator, duplicate
/// attribute, trailing tokens).
std::optional<QueryAst> parse_query(const std::string& text);

/// Canonical string form: constraints in the fixed attribute order
/// airline, from_city, to_city, departure_time, date, has_meal.
std::string print_query(const QueryAst& ast);

/// Filters rows by the conjunction and projects the selected column.
std::vector<std::string> execute_query(const QueryAst& ast, const ToyDatabase& db);

/// String entry point: unparseable text is an execution failure (nullopt),
/// never a crash.
std::optional<std::vector<std::string>> execute_query_text(const std::string& text,
                                                           const ToyDatabase& db);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Exact canonical match after normalization (constraint order canonicalized
/// by the parse -> print round trip). Unparseable predictions never match.
double query_accuracy(std::span<const std::string> preds, std::span<const std::string> golds);

bool query_match(const std::string& pred, const std::string& gold);

enum class DenotationMode { Strict, Relaxed };

/// Strict: execution results equal as multisets. Relaxed: additionally credit
/// a prediction that fails to execute when the reference result is empty.
double denotation_accuracy(std::span<const std::string> preds,
                           std::span<const std::string> golds, const ToyDatabase& db,
                           DenotationMode mode);

bool denotation_match(const std::string& pred, const std::string& gold,
                      const ToyDatabase& db, DenotationMode mode);

struct InteractionMetrics {
  double question_accuracy = 0.0;
  double interaction_accuracy = 0.0;
};

/// Question accuracy is the micro average over turns; an interaction counts
/// as correct only when every turn is correct.
InteractionMetrics interaction_metrics(const std::vector<std::vector<bool>>& per_interaction);

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

struct PhenomenonMix {
  double extension = 0.30;
  double revision = 0.25;
  double focus_shift = 0.15;
  double ellipsis = 0.15;
  double independent = 0.15;

  /// Throws invalid_argument unless the proportions are non-negative and sum
  /// to 1 within 1e-9.
  void validate() const;
  static PhenomenonMix from_csv(const std::string& csv);
};

/// Deterministic synthetic interactions: 2-8 turns each, the first turn
/// independent, later turns drawn from the mix. Chunk tags and anonymization
/// maps are emitted by construction; every gold query executes on the
/// database generated from any seed.
std::vector<InteractionRecord> generate_dataset(std::uint64_t seed, std::size_t n_interactions,
                                                const PhenomenonMix& mix,
                                                const std::string& id_prefix = "i");

/// The closed token inventories of the task: every surface token the
/// templates can emit, every query token, and every placeholder name. Models
/// trained on one split stay total over any other split.
struct TaskInventory {
  std::vector<std::string> input_tokens;
  std::vector<std::string> output_tokens;
  std::vector<std::string> placeholders;
};

TaskInventory toytask_token_inventory();

}  // namespace memce
