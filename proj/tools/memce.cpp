// memce: context-dependent utterance-to-query parsing on a synthetic
// flights task. Subcommands: generate | segment | train | eval |
// inspect-memory. Flat key=value config files; command-line flags override
// file values. Exit codes: 0 success, 2 usage/data error, 3 internal
// consistency error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "memce/model.hpp"
#include "memce/segmentation.hpp"
#include "memce/toytask.hpp"
#include "memce/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace memce;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  TrainConfig train;
  std::string dataset, db, checkpoint, out;
  std::string mix_csv;
  std::size_t train_interactions = 2000;
  std::size_t dev_interactions = 200;
  std::size_t test_interactions = 200;
  std::size_t db_rows = 400;

  // typed assignment shared by config files and command-line flags
  void set(const std::string& key, const std::string& value) {
    auto to_u64 = [&](const std::string& v) -> std::uint64_t {
      try {
        return std::stoull(v);
      } catch (...) {
        throw UsageError("bad integer for " + key + ": " + v);
      }
    };
    auto to_f = [&](const std::string& v) -> double {
      try {
        return std::stod(v);
      } catch (...) {
        throw UsageError("bad number for " + key + ": " + v);
      }
    };
    auto to_b = [&](const std::string& v) -> bool {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw UsageError("bad boolean for " + key + ": " + v);
    };
    if (key == "seed")
      train.seed = to_u64(value);
    else if (key == "epochs")
      train.max_epochs = to_u64(value);
    else if (key == "memory-slots")
      train.model.memory_slots = to_u64(value);
    else if (key == "temperature")
      train.model.temperature = to_f(value);
    else if (key == "decay")
      train.model.decay = to_f(value);
    else if (key == "ablation")
      train.model.ablation = ablation_from_name(value);
    else if (key == "context-blind")
      train.model.context_blind = to_b(value);
    else if (key == "hidden")
      train.model.hidden = to_u64(value);
    else if (key == "embed-dim")
      train.model.embed_dim = to_u64(value);
    else if (key == "dec-embed")
      train.model.dec_embed = to_u64(value);
    else if (key == "dropout")
      train.model.dropout = to_f(value);
    else if (key == "max-decode-len")
      train.model.max_decode_len = to_u64(value);
    else if (key == "learning-rate")
      train.learning_rate = to_f(value);
    else if (key == "lr-decay")
      train.lr_decay = to_f(value);
    else if (key == "patience")
      train.plateau_patience = to_u64(value);
    else if (key == "min-delta")
      train.min_delta = to_f(value);
    else if (key == "lr-min")
      train.lr_min = to_f(value);
    else if (key == "clip-norm")
      train.clip_norm = to_f(value);
    else if (key == "val-fraction")
      train.val_fraction = to_f(value);
    else if (key == "dataset")
      dataset = value;
    else if (key == "db")
      db = value;
    else if (key == "checkpoint")
      checkpoint = value;
    else if (key == "out")
      out = value;
    else if (key == "mix")
      mix_csv = value;
    else if (key == "train-interactions")
      train_interactions = to_u64(value);
    else if (key == "dev-interactions")
      dev_interactions = to_u64(value);
    else if (key == "test-interactions")
      test_interactions = to_u64(value);
    else if (key == "db-rows")
      db_rows = to_u64(value);
    else
      throw UsageError("unknown configuration key: " + key);
  }

  std::string echo() const {
    std::ostringstream out_text;
    out_text << "seed=" << train.seed << "\n"
             << "epochs=" << train.max_epochs << "\n"
             << "memory-slots=" << train.model.memory_slots << "\n"
             << "temperature=" << train.model.temperature << "\n"
             << "decay=" << train.model.decay << "\n"
             << "ablation=" << ablation_name(train.model.ablation) << "\n"
             << "context-blind=" << (train.model.context_blind ? "true" : "false") << "\n"
             << "hidden=" << train.model.hidden << "\n"
             << "embed-dim=" << train.model.embed_dim << "\n"
             << "dec-embed=" << train.model.dec_embed << "\n"
             << "dropout=" << train.model.dropout << "\n"
             << "max-decode-len=" << train.model.max_decode_len << "\n"
             << "learning-rate=" << train.learning_rate << "\n"
             << "lr-decay=" << train.lr_decay << "\n"
             << "patience=" << train.plateau_patience << "\n"
             << "min-delta=" << train.min_delta << "\n"
             << "lr-min=" << train.lr_min << "\n"
             << "clip-norm=" << train.clip_norm << "\n"
             << "val-fraction=" << train.val_fraction << "\n"
             << "dataset=" << dataset << "\n"
             << "db=" << db << "\n"
             << "checkpoint=" << checkpoint << "\n"
             << "out=" << out << "\n"
             << "mix=" << mix_csv << "\n"
             << "train-interactions=" << train_interactions << "\n"
             << "dev-interactions=" << dev_interactions << "\n"
             << "test-interactions=" << test_interactions << "\n"
             << "db-rows=" << db_rows << "\n";
    return out_text.str();
  }
};

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line_no) + " is not key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const std::size_t x = s.find_first_not_of(" \t");
      const std::size_t y = s.find_last_not_of(" \t");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
    };
    trim(key);
    trim(value);
    cfg.set(key, value);
  }
}

struct Cli {
  std::string command;
  RunConfig cfg;
  std::vector<std::string> positional;
};

Cli parse_cli(int argc, char** argv) {
  if (argc < 2)
    throw UsageError(
        "usage: memce <generate|segment|train|eval|inspect-memory> [--config PATH] "
        "[--flag value ...]");
  Cli cli;
  cli.command = argv[1];

  // first pass: find --config so flags override file values
  std::vector<std::pair<std::string, std::string>> flags;
  for (int i = 2; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind("--", 0) == 0) {
      if (i + 1 >= argc) throw UsageError("flag needs a value: " + arg);
      flags.emplace_back(arg.substr(2), argv[++i]);
    } else {
      cli.positional.push_back(arg);
    }
  }
  for (const auto& [key, value] : flags)
    if (key == "config") load_config_file(cli.cfg, value);
  for (const auto& [key, value] : flags)
    if (key != "config") cli.cfg.set(key, value);
  return cli;
}

void echo_config(const RunConfig& cfg) {
  if (cfg.out.empty()) return;
  fs::create_directories(cfg.out);
  std::ofstream out(fs::path(cfg.out) / "config.txt");
  out << cfg.echo();
}

PhenomenonMix mix_of(const RunConfig& cfg) {
  return cfg.mix_csv.empty() ? PhenomenonMix{} : PhenomenonMix::from_csv(cfg.mix_csv);
}

// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("generate needs --out DIR");
  PhenomenonMix mix = mix_of(cfg);
  mix.validate();
  echo_config(cfg);
  fs::create_directories(cfg.out);

  const std::size_t total =
      cfg.train_interactions + cfg.dev_interactions + cfg.test_interactions;
  std::vector<InteractionRecord> all = generate_dataset(cfg.train.seed, total, mix);
  auto cut = [&](std::size_t from, std::size_t count) {
    return std::vector<InteractionRecord>(all.begin() + static_cast<std::ptrdiff_t>(from),
                                          all.begin() + static_cast<std::ptrdiff_t>(from + count));
  };
  const fs::path dir(cfg.out);
  write_dataset_file((dir / "train.jsonl").string(), cut(0, cfg.train_interactions));
  write_dataset_file((dir / "dev.jsonl").string(),
                     cut(cfg.train_interactions, cfg.dev_interactions));
  write_dataset_file((dir / "test.jsonl").string(),
                     cut(cfg.train_interactions + cfg.dev_interactions, cfg.test_interactions));
  ToyDatabase db = ToyDatabase::generate(cfg.train.seed, cfg.db_rows);
  db.save((dir / "db.json").string());

  std::map<std::string, std::size_t> phenomena;
  std::size_t turns = 0;
  for (const InteractionRecord& rec : all)
    for (const Turn& t : rec.turns) {
      ++turns;
      for (const std::string& p : t.phenomena) ++phenomena[p];
    }
  json summary{{"interactions", total},
               {"turns", turns},
               {"phenomena", phenomena},
               {"splits",
                {{"train", cfg.train_interactions},
                 {"dev", cfg.dev_interactions},
                 {"test", cfg.test_interactions}}},
               {"db_rows", cfg.db_rows},
               {"out", cfg.out}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_segment(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw UsageError("segment needs --dataset PATH");
  std::ifstream probe(cfg.dataset);
  if (!probe) throw DataError("cannot open dataset: " + cfg.dataset);
  if (probe.peek() == std::ifstream::traits_type::eof()) return 0;  // empty file, empty output
  probe.close();

  std::vector<InteractionRecord> data = read_dataset_file(cfg.dataset);
  for (const InteractionRecord& rec : data) {
    for (const Turn& turn : rec.turns) {
      ChunkedUtterance u = chunked_from_turn(turn);
      std::vector<Segment> segs = merge_chunks(u);
      align_anonymization(u, segs);
      std::cout << format_segments(u.tokens, segs) << "\n";
    }
  }
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw UsageError("train needs --dataset PATH");
  if (cfg.db.empty()) throw UsageError("train needs --db PATH");
  if (cfg.out.empty()) throw UsageError("train needs --out DIR");
  echo_config(cfg);

  std::vector<InteractionRecord> full_train = read_dataset_file(cfg.dataset);
  ToyDatabase db = ToyDatabase::load(cfg.db);
  auto [train_part, val_part] = split_validation(full_train, cfg.train.val_fraction);

  // closed task inventory, so evaluation splits never hit out-of-vocabulary
  // query tokens
  TaskInventory inv = toytask_token_inventory();
  Vocabulary vocab = Vocabulary::from_tokens(inv.input_tokens, inv.output_tokens,
                                             inv.placeholders);
  MemceModel model(cfg.train.model, vocab, cfg.train.seed);
  TrainResult result = train(model, train_part, val_part, db, cfg.train);

  const fs::path dir(cfg.out);
  const std::string ckpt =
      cfg.checkpoint.empty() ? (dir / "checkpoint.json").string() : cfg.checkpoint;
  CheckpointMeta meta{result.best_epoch, result.best_val_loss, result.best_val_query_acc};
  save_checkpoint(ckpt, model, cfg.train, meta);
  write_epoch_csv((dir / "epochs.csv").string(), result.epochs);

  json summary{{"best_epoch", result.best_epoch},
               {"val_query_acc", result.best_val_query_acc},
               {"val_loss", result.best_val_loss},
               {"epochs_run", result.epochs.size()},
               {"checkpoint", ckpt}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

json eval_to_json(const EvalResult& r) {
  json per = json::object();
  for (const auto& [label, st] : r.per_phenomenon) {
    per[label] = {{"count", st.count},
                  {"query_acc", st.count ? static_cast<double>(st.query_correct) / st.count : 0.0},
                  {"denotation_strict",
                   st.count ? static_cast<double>(st.denotation_strict_correct) / st.count : 0.0}};
  }
  return json{{"query_acc", r.query_acc},
              {"denotation_strict", r.denotation_strict},
              {"denotation_relaxed", r.denotation_relaxed},
              {"question_acc", r.question_acc},
              {"interaction_acc", r.interaction_acc},
              {"per_phenomenon", per}};
}

int cmd_eval(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw UsageError("eval needs --checkpoint PATH");
  if (cfg.dataset.empty()) throw UsageError("eval needs --dataset PATH");
  if (cfg.db.empty()) throw UsageError("eval needs --db PATH");

  LoadedCheckpoint ckpt = load_checkpoint(cfg.checkpoint);
  std::vector<InteractionRecord> data = read_dataset_file(cfg.dataset);
  ToyDatabase db = ToyDatabase::load(cfg.db);
  EvalResult r = evaluate(*ckpt.model, data, db);
  json out = eval_to_json(r);
  std::cout << out.dump(2) << "\n";
  if (!cfg.out.empty()) {
    echo_config(cfg);
    std::ofstream f(fs::path(cfg.out) / "metrics.json");
    f << out.dump(2) << "\n";
  }
  return 0;
}

int cmd_inspect_memory(const RunConfig& cfg, const std::vector<std::string>& positional) {
  if (cfg.checkpoint.empty()) throw UsageError("inspect-memory needs --checkpoint PATH");
  if (cfg.dataset.empty()) throw UsageError("inspect-memory needs --dataset PATH");
  if (positional.empty()) throw UsageError("inspect-memory needs an interaction id");
  const std::string& id = positional[0];

  LoadedCheckpoint ckpt = load_checkpoint(cfg.checkpoint);
  std::vector<InteractionRecord> data = read_dataset_file(cfg.dataset);
  const InteractionRecord* rec = nullptr;
  for (const InteractionRecord& r : data)
    if (r.interaction_id == id) rec = &r;
  if (rec == nullptr) throw DataError("unknown interaction id: " + id);

  Tape tape(false);
  MemceModel::ForwardResult fr =
      ckpt.model->forward_interaction(tape, *rec, MemceModel::Mode::Eval);
  const std::size_t slots = ckpt.model->config().memory_slots;

  write_trace_csv(std::cout, fr.trace, slots);
  if (!cfg.out.empty()) {
    echo_config(cfg);
    const fs::path dir(cfg.out);
    std::ofstream csv(dir / "memory_trace.csv");
    write_trace_csv(csv, fr.trace, slots);
    std::ofstream sidecar(dir / "memory_trace.json");
    write_trace_sidecar(sidecar, fr.trace, slots);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    Cli cli = parse_cli(argc, argv);
    if (cli.command == "generate") return cmd_generate(cli.cfg);
    if (cli.command == "segment") return cmd_segment(cli.cfg);
    if (cli.command == "train") return cmd_train(cli.cfg);
    if (cli.command == "eval") return cmd_eval(cli.cfg);
    if (cli.command == "inspect-memory") return cmd_inspect_memory(cli.cfg, cli.positional);
    throw UsageError("unknown command: " + cli.command);
  } catch (const UsageError& e) {
    std::cerr << "memce: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "memce: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "memce: " << e.what() << "\n";
    return 2;
  } catch (const ConsistencyError& e) {
    std::cerr << "memce: consistency error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "memce: internal error: " << e.what() << "\n";
    return 3;
  }
}
