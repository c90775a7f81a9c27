// Command-line front end for the guarantee-network credit risk pipeline.
// Every subcommand reads CSV tables (or a config), writes its outputs under
// --out-dir, and drops a manifest.json describing the run. Outputs carry no
// timestamps, so identical invocations produce identical bytes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "guarnet/community.hpp"
#include "guarnet/csv.hpp"
#include "guarnet/date.hpp"
#include "guarnet/eval.hpp"
#include "guarnet/features.hpp"
#include "guarnet/gbdt.hpp"
#include "guarnet/graph.hpp"
#include "guarnet/loan_data.hpp"
#include "guarnet/matrix.hpp"
#include "guarnet/reports.hpp"
#include "guarnet/synth.hpp"

int run_selftest();

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kDataFormatVersion = 1;
constexpr int kModelFormatVersion = 1;

// A bad flag value or config entry; exits 1 rather than the data-error 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value config shared by all subcommands. Keys outside the union of
// recognized keys are rejected so typos cannot silently change a run.
struct KeyValueConfig {
  std::map<std::string, std::string> kv;

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file: " + path);
    KeyValueConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      if (trim(line).empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError(path + " line " + std::to_string(line_no) + ": expected key=value");
      std::string key = trim(line.substr(0, eq));
      c.kv[key] = trim(line.substr(eq + 1));
    }
    static const std::set<std::string> known = {
        // generator
        "n_customers", "start_month", "n_months", "target_default_rate", "share_small",
        "share_large", "mix_one_year", "mix_two_three_year", "mix_long", "beta_authority",
        "beta_hub", "beta_community", "beta_quarter_end", "intercept", "annual_volume_growth",
        "entry_span_fraction", "seed",
        // training
        "rounds", "eta", "max_depth", "gamma", "lambda", "min_child_hessian", "base_score",
        // rolling protocol
        "start", "windows", "recall_threshold", "ablations", "method", "max_communities",
        // snapshots
        "as_of"};
    for (const auto& [key, value] : c.kv)
      if (!known.count(key)) throw UsageError(path + ": unknown config key '" + key + "'");
    return c;
  }

  // The generator parses its own keys; hand it only those.
  std::string generator_subset() const {
    static const std::set<std::string> gen_keys = {
        "n_customers", "start_month", "n_months", "target_default_rate", "share_small",
        "share_large", "mix_one_year", "mix_two_three_year", "mix_long", "beta_authority",
        "beta_hub", "beta_community", "beta_quarter_end", "intercept", "annual_volume_growth",
        "entry_span_fraction", "seed"};
    std::string text;
    for (const auto& [key, value] : kv)
      if (gen_keys.count(key)) text += key + " = " + value + "\n";
    return text;
  }

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  const std::string& at(const std::string& key) const { return kv.at(key); }
};

// Defaults < config file < flags: a flag the user typed wins; otherwise a
// config entry, if present, replaces the default already stored in `out`.
template <typename T>
void resolve(const CLI::Option* opt, const KeyValueConfig& cfg, const std::string& key, T& out) {
  if (opt != nullptr && opt->count() > 0) return;
  if (!cfg.has(key)) return;
  const std::string& v = cfg.at(key);
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      out = v;
    } else if constexpr (std::is_same_v<T, int>) {
      out = std::stoi(v);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      out = std::stoull(v);
    } else {
      out = std::stod(v);
    }
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': cannot parse value '" + v + "'");
  }
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// The manifest pins what produced the directory contents: command, resolved
// settings, inputs and outputs by name. Deliberately no timestamps.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const std::map<std::string, std::string>& settings) {
  nlohmann::json j;
  j["command"] = command;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["settings"] = settings;
  std::string canonical;
  for (const auto& [key, value] : settings) canonical += key + "=" + value + "\n";
  j["config_hash"] = hex64(fnv1a64(canonical));
  j["versions"] = {{"guarnet", kVersion},
                   {"data_format", kDataFormatVersion},
                   {"model_format", kModelFormatVersion}};
  std::ofstream out(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest under " + out_dir);
  out << j.dump(2) << "\n";
}

std::string out_path(const std::string& out_dir, const std::string& name) {
  return (std::filesystem::path(out_dir) / name).string();
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create out dir " + out_dir + ": " + ec.message());
}

guarnet::LoanDataset load_validated(const std::string& data_dir) {
  auto ds = guarnet::load_tables(guarnet::TablePaths::in_dir(data_dir));
  auto report = guarnet::validate(ds);
  if (!report.ok())
    throw std::runtime_error("dataset in " + data_dir + " failed validation:\n" +
                             report.summary());
  return ds;
}

guarnet::Date dataset_first_event(const guarnet::LoanDataset& ds) {
  // Registrations predate lending activity and form no network on their own,
  // so the series starts with the first contract or guarantee.
  guarnet::Date first = guarnet::make_date(9999, 12, 31);
  for (const auto& k : ds.contracts) first = std::min(first, k.start_date);
  for (const auto& gte : ds.guarantees) first = std::min(first, gte.signed_date);
  return first;
}

guarnet::Date dataset_last_event(const guarnet::LoanDataset& ds) {
  guarnet::Date last = guarnet::make_date(1, 1, 1);
  for (const auto& k : ds.contracts) last = std::max(last, k.maturity());
  for (const auto& r : ds.repayments) last = std::max(last, r.due_date);
  return last;
}

guarnet::CommunityMethod parse_method(const std::string& s) {
  if (s == "edge_betweenness") return guarnet::CommunityMethod::edge_betweenness;
  if (s == "label_propagation") return guarnet::CommunityMethod::label_propagation;
  throw UsageError("unknown community method '" + s +
                   "' (want edge_betweenness or label_propagation)");
}

std::vector<guarnet::Ablation> parse_ablation_list(const std::string& s) {
  std::vector<guarnet::Ablation> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(guarnet::parse_ablation(item));
    } catch (const std::exception&) {
      throw UsageError("unknown ablation '" + item + "' (want NW, NW+CM, NW+N, H)");
    }
  }
  if (out.empty()) throw UsageError("--ablations: empty list");
  return out;
}

// Snapshot selection shared by graph/centrality/communities: a concrete
// --as-of date, or the all-time union network when the flag is absent.
struct SnapshotChoice {
  std::optional<guarnet::Date> as_of;

  guarnet::GuaranteeNetwork build(const guarnet::JoinedRecords& joined) const {
    return as_of ? guarnet::build_network(joined, *as_of)
                 : guarnet::build_union_network(joined);
  }

  guarnet::Date risk_cutoff() const {
    return as_of ? *as_of : guarnet::make_date(9999, 12, 31);
  }

  std::string describe() const { return as_of ? guarnet::to_string(*as_of) : "union"; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guarnet: guarantee-network credit risk pipeline"};
  app.require_subcommand(1);

  std::string data_dir = ".";
  std::string out_dir = ".";
  std::string config_path;
  std::uint64_t seed = 42;
  int threads = 1;
  app.add_option("--data-dir", data_dir, "directory with the four input CSV tables")
      ->capture_default_str();
  app.add_option("--out-dir", out_dir, "directory outputs are written to")
      ->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "generator seed")->capture_default_str();
  app.add_option("--config", config_path, "key=value config file (flags override it)");
  app.add_option("--threads", threads,
                 "worker thread cap (the current pipeline is single-threaded)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic loan dataset");
  synth->fallthrough();
  std::int64_t synth_customers = 5000;
  int synth_months = 48;
  auto* synth_customers_opt =
      synth->add_option("--customers", synth_customers, "number of firms")->capture_default_str();
  auto* synth_months_opt =
      synth->add_option("--months", synth_months, "timeline length in months")
          ->capture_default_str();

  // stats
  auto* stats = app.add_subcommand("stats", "dataset-level statistics report");
  stats->fallthrough();

  // graph
  auto* graph = app.add_subcommand("graph", "component summary and monthly complexity series");
  graph->fallthrough();
  std::string graph_as_of;
  graph->add_option("--as-of", graph_as_of,
                    "snapshot date YYYY-MM-DD (default: all-time union network)");

  // centrality
  auto* centrality =
      app.add_subcommand("centrality", "per-node structural scores and risk deciles");
  centrality->fallthrough();
  std::string cent_as_of;
  centrality->add_option("--as-of", cent_as_of,
                         "snapshot date YYYY-MM-DD (default: all-time union network)");

  // communities
  auto* communities =
      app.add_subcommand("communities", "community assignment and per-community risk");
  communities->fallthrough();
  std::string comm_as_of;
  std::string comm_method = "edge_betweenness";
  int comm_max = guarnet::kDefaultMaxCommunities;
  communities->add_option("--as-of", comm_as_of,
                          "snapshot date YYYY-MM-DD (default: all-time union network)");
  auto* comm_method_opt =
      communities
          ->add_option("--method", comm_method, "edge_betweenness or label_propagation")
          ->capture_default_str();
  auto* comm_max_opt =
      communities->add_option("--max-communities", comm_max, "per-component community cap")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);

  // features
  auto* features = app.add_subcommand("features", "feature matrix dump for one train quarter");
  features->fallthrough();
  std::string feat_quarter;
  std::string feat_method = "edge_betweenness";
  int feat_max = guarnet::kDefaultMaxCommunities;
  features->add_option("--quarter", feat_quarter, "train quarter, e.g. 2013Q1")->required();
  auto* feat_method_opt =
      features->add_option("--method", feat_method, "edge_betweenness or label_propagation")
          ->capture_default_str();
  auto* feat_max_opt =
      features->add_option("--max-communities", feat_max, "per-component community cap")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);

  // shared training params (train + rolling)
  guarnet::gbdt::TrainParams defaults;
  struct TrainFlags {
    int rounds;
    double eta;
    int max_depth;
    double gamma;
    double lambda;
    double min_child_hessian;
    double base_score;
    CLI::Option *rounds_o, *eta_o, *depth_o, *gamma_o, *lambda_o, *mch_o, *base_o;
  };
  auto add_train_flags = [&](CLI::App* sub) {
    TrainFlags f;
    f.rounds = defaults.rounds;
    f.eta = defaults.eta;
    f.max_depth = defaults.max_depth;
    f.gamma = defaults.gamma;
    f.lambda = defaults.lambda;
    f.min_child_hessian = defaults.min_child_hessian;
    f.base_score = defaults.base_score;
    f.rounds_o = sub->add_option("--rounds", f.rounds, "boosting rounds")->capture_default_str();
    f.eta_o = sub->add_option("--eta", f.eta, "shrinkage")->capture_default_str();
    f.depth_o = sub->add_option("--max-depth", f.max_depth, "tree depth cap")
                    ->capture_default_str();
    f.gamma_o = sub->add_option("--gamma", f.gamma, "per-leaf penalty")->capture_default_str();
    f.lambda_o =
        sub->add_option("--lambda", f.lambda, "L2 leaf weight penalty")->capture_default_str();
    f.mch_o = sub->add_option("--min-child-hessian", f.min_child_hessian,
                              "minimum hessian mass per child")
                  ->capture_default_str();
    f.base_o =
        sub->add_option("--base-score", f.base_score, "initial log-odds")->capture_default_str();
    return f;
  };
  auto resolve_train_params = [](const TrainFlags& f, const KeyValueConfig& cfg) {
    guarnet::gbdt::TrainParams p;
    p.rounds = f.rounds;
    p.eta = f.eta;
    p.max_depth = f.max_depth;
    p.gamma = f.gamma;
    p.lambda = f.lambda;
    p.min_child_hessian = f.min_child_hessian;
    p.base_score = f.base_score;
    resolve(f.rounds_o, cfg, "rounds", p.rounds);
    resolve(f.eta_o, cfg, "eta", p.eta);
    resolve(f.depth_o, cfg, "max_depth", p.max_depth);
    resolve(f.gamma_o, cfg, "gamma", p.gamma);
    resolve(f.lambda_o, cfg, "lambda", p.lambda);
    resolve(f.mch_o, cfg, "min_child_hessian", p.min_child_hessian);
    resolve(f.base_o, cfg, "base_score", p.base_score);
    return p;
  };
  auto train_settings = [](const guarnet::gbdt::TrainParams& p,
                           std::map<std::string, std::string>& s) {
    s["rounds"] = std::to_string(p.rounds);
    s["eta"] = guarnet::csv::format_double(p.eta);
    s["max_depth"] = std::to_string(p.max_depth);
    s["gamma"] = guarnet::csv::format_double(p.gamma);
    s["lambda"] = guarnet::csv::format_double(p.lambda);
    s["min_child_hessian"] = guarnet::csv::format_double(p.min_child_hessian);
    s["base_score"] = guarnet::csv::format_double(p.base_score);
  };

  // train
  auto* train = app.add_subcommand("train", "fit a boosted-tree model on a feature matrix");
  train->fallthrough();
  std::string train_matrix, train_map, train_model = "model.json";
  train->add_option("--matrix", train_matrix, "feature matrix CSV")->required();
  train->add_option("--categories", train_map, "sidecar category map JSON")->required();
  train->add_option("--model", train_model, "model file name under --out-dir")
      ->capture_default_str();
  TrainFlags train_flags = add_train_flags(train);

  // predict
  auto* predict = app.add_subcommand("predict", "score a feature matrix with a saved model");
  predict->fallthrough();
  std::string pred_model, pred_matrix, pred_map, pred_out = "predictions.csv";
  predict->add_option("--model", pred_model, "model JSON path")->required();
  predict->add_option("--matrix", pred_matrix, "feature matrix CSV")->required();
  predict->add_option("--categories", pred_map, "sidecar category map JSON")->required();
  predict->add_option("--out", pred_out, "output file name under --out-dir")
      ->capture_default_str();

  // rolling
  auto* rolling = app.add_subcommand("rolling", "rolling-window ablation benchmark");
  rolling->fallthrough();
  std::string roll_start = "2013Q1";
  int roll_windows = 10;
  double roll_threshold = 0.5;
  std::string roll_ablations = "NW,NW+CM,NW+N,H";
  std::string roll_method = "edge_betweenness";
  int roll_max = guarnet::kDefaultMaxCommunities;
  auto* roll_start_opt =
      rolling->add_option("--start", roll_start, "first train quarter, e.g. 2013Q1")
          ->capture_default_str();
  auto* roll_windows_opt =
      rolling->add_option("--windows", roll_windows, "number of rolling windows")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  auto* roll_threshold_opt =
      rolling->add_option("--recall-threshold", roll_threshold, "probability cutoff for recall")
          ->capture_default_str();
  auto* roll_ablations_opt =
      rolling->add_option("--ablations", roll_ablations, "comma list from NW,NW+CM,NW+N,H")
          ->capture_default_str();
  auto* roll_method_opt =
      rolling->add_option("--method", roll_method, "edge_betweenness or label_propagation")
          ->capture_default_str();
  auto* roll_max_opt =
      rolling->add_option("--max-communities", roll_max, "per-component community cap")
          ->capture_default_str()
          ->check(CLI::PositiveNumber);
  TrainFlags roll_flags = add_train_flags(rolling);

  // selftest
  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle suites");
  selftest->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    KeyValueConfig cfg;
    if (!config_path.empty()) cfg = KeyValueConfig::load(config_path);

    auto parse_as_of = [](const std::string& s) -> std::optional<guarnet::Date> {
      if (s.empty()) return std::nullopt;
      try {
        return guarnet::parse_date(s);
      } catch (const std::exception&) {
        throw UsageError("--as-of: cannot parse date '" + s + "' (want YYYY-MM-DD)");
      }
    };

    if (app.got_subcommand(synth)) {
      guarnet::synth::SynthConfig sc;
      {
        std::istringstream gen(cfg.generator_subset());
        sc = guarnet::synth::parse_config(gen, sc);
      }
      if (synth_customers_opt->count()) sc.n_customers = synth_customers;
      if (synth_months_opt->count()) sc.n_months = synth_months;
      if (seed_opt->count()) sc.seed = seed;

      ensure_out_dir(out_dir);
      auto ds = guarnet::synth::generate(sc);
      guarnet::save_tables(ds, guarnet::TablePaths::in_dir(out_dir));

      std::map<std::string, std::string> s;
      s["n_customers"] = std::to_string(sc.n_customers);
      s["n_months"] = std::to_string(sc.n_months);
      s["start_month"] = std::to_string(sc.start_year) + "-" +
                         (sc.start_month < 10 ? "0" : "") + std::to_string(sc.start_month);
      s["seed"] = std::to_string(sc.seed);
      s["target_default_rate"] = guarnet::csv::format_double(sc.target_default_rate);
      s["share_small"] = guarnet::csv::format_double(sc.component_mix.share_small);
      s["share_large"] = guarnet::csv::format_double(sc.component_mix.share_large);
      s["mix_one_year"] = guarnet::csv::format_double(sc.loan_period_mix.one_year);
      s["mix_two_three_year"] = guarnet::csv::format_double(sc.loan_period_mix.two_three_year);
      s["mix_long"] = guarnet::csv::format_double(sc.loan_period_mix.long_term);
      s["beta_authority"] = guarnet::csv::format_double(sc.hazard.beta_authority);
      s["beta_hub"] = guarnet::csv::format_double(sc.hazard.beta_hub);
      s["beta_community"] = guarnet::csv::format_double(sc.hazard.beta_community);
      s["beta_quarter_end"] = guarnet::csv::format_double(sc.hazard.beta_quarter_end);
      s["annual_volume_growth"] = guarnet::csv::format_double(sc.annual_volume_growth);
      s["entry_span_fraction"] = guarnet::csv::format_double(sc.entry_span_fraction);
      write_manifest(out_dir, "synth",
                     config_path.empty() ? std::vector<std::string>{}
                                         : std::vector<std::string>{config_path},
                     {"customers.csv", "contracts.csv", "guarantees.csv", "repayments.csv"}, s);
    } else if (app.got_subcommand(stats)) {
      ensure_out_dir(out_dir);
      auto ds = load_validated(data_dir);
      auto report = guarnet::overall_stats(ds);
      {
        std::ofstream out(out_path(out_dir, "stats.json"), std::ios::binary);
        out << guarnet::stats_to_json(report).dump(2) << "\n";
      }
      guarnet::write_loan_period_csv(report, out_path(out_dir, "loan_period.csv"));
      guarnet::write_monthly_default_csv(report, out_path(out_dir, "monthly_default.csv"));
      guarnet::write_default_offset_csv(report, out_path(out_dir, "default_offset.csv"));
      guarnet::write_component_bucket_csv(report, out_path(out_dir, "component_buckets.csv"));
      write_manifest(out_dir, "stats", {data_dir},
                     {"stats.json", "loan_period.csv", "monthly_default.csv",
                      "default_offset.csv", "component_buckets.csv"},
                     {{"data_dir", data_dir}});
    } else if (app.got_subcommand(graph)) {
      ensure_out_dir(out_dir);
      auto ds = load_validated(data_dir);
      auto joined = guarnet::join_records(ds);
      SnapshotChoice snap{parse_as_of(graph_as_of)};
      auto net = snap.build(joined);
      guarnet::write_component_summary_csv(guarnet::components(net),
                                           out_path(out_dir, "components.csv"));
      auto series =
          guarnet::complexity_series(joined, dataset_first_event(ds), dataset_last_event(ds));
      guarnet::write_complexity_csv(series, out_path(out_dir, "complexity.csv"));
      write_manifest(out_dir, "graph", {data_dir}, {"components.csv", "complexity.csv"},
                     {{"data_dir", data_dir}, {"as_of", snap.describe()}});
    } else if (app.got_subcommand(centrality)) {
      ensure_out_dir(out_dir);
      auto ds = load_validated(data_dir);
      auto joined = guarnet::join_records(ds);
      SnapshotChoice snap{parse_as_of(cent_as_of)};
      auto net = snap.build(joined);
      auto subs = guarnet::components(net);
      std::vector<guarnet::CentralityScores> scores;
      scores.reserve(subs.size());
      for (const auto& sub : subs) scores.push_back(guarnet::compute_centrality(sub));
      guarnet::write_centrality_csv(subs, scores, out_path(out_dir, "centrality.csv"));
      auto defaults = guarnet::build_default_index(ds);
      auto deciles = guarnet::centrality_deciles(subs, scores, defaults, snap.risk_cutoff());
      guarnet::write_decile_csv(deciles, out_path(out_dir, "centrality_deciles.csv"));
      write_manifest(out_dir, "centrality", {data_dir},
                     {"centrality.csv", "centrality_deciles.csv"},
                     {{"data_dir", data_dir}, {"as_of", snap.describe()}});
    } else if (app.got_subcommand(communities)) {
      ensure_out_dir(out_dir);
      resolve(comm_method_opt, cfg, "method", comm_method);
      resolve(comm_max_opt, cfg, "max_communities", comm_max);
      auto method = parse_method(comm_method);
      auto ds = load_validated(data_dir);
      auto joined = guarnet::join_records(ds);
      SnapshotChoice snap{parse_as_of(comm_as_of)};
      auto net = snap.build(joined);
      auto subs = guarnet::components(net);
      auto defaults = guarnet::build_default_index(ds);
      std::vector<guarnet::Partition> parts;
      std::vector<guarnet::CommunityRiskTable> tables;
      parts.reserve(subs.size());
      tables.reserve(subs.size());
      for (const auto& sub : subs) {
        parts.push_back(guarnet::detect_communities(sub, method, comm_max));
        tables.push_back(guarnet::community_default_rate(sub, parts.back(), defaults,
                                                         snap.risk_cutoff()));
      }
      guarnet::write_community_assignment_csv(subs, parts, out_path(out_dir, "communities.csv"));
      {
        std::ofstream out(out_path(out_dir, "community_risk.json"), std::ios::binary);
        out << guarnet::community_risk_json(subs, parts, tables).dump(2) << "\n";
      }
      write_manifest(out_dir, "communities", {data_dir},
                     {"communities.csv", "community_risk.json"},
                     {{"data_dir", data_dir},
                      {"as_of", snap.describe()},
                      {"method", comm_method},
                      {"max_communities", std::to_string(comm_max)}});
    } else if (app.got_subcommand(features)) {
      ensure_out_dir(out_dir);
      resolve(feat_method_opt, cfg, "method", feat_method);
      resolve(feat_max_opt, cfg, "max_communities", feat_max);
      auto method = parse_method(feat_method);
      guarnet::WindowQuad window;
      try {
        window.train = guarnet::parse_quarter(feat_quarter);
      } catch (const std::exception&) {
        throw UsageError("--quarter: cannot parse '" + feat_quarter + "' (want e.g. 2013Q1)");
      }
      auto ds = load_validated(data_dir);
      auto joined = guarnet::join_records(ds);
      auto net = guarnet::build_network(joined, window.snapshot());
      auto analysis = guarnet::analyze_snapshot(net, method, feat_max);
      auto matrix = guarnet::assemble(ds, window, net, analysis);
      std::string base = "features_" + window.label();
      guarnet::write_matrix_csv(matrix, out_path(out_dir, base + ".csv"));
      guarnet::write_category_map(matrix, out_path(out_dir, base + ".categories.json"));
      write_manifest(out_dir, "features", {data_dir},
                     {base + ".csv", base + ".categories.json"},
                     {{"data_dir", data_dir},
                      {"quarter", window.label()},
                      {"method", feat_method},
                      {"max_communities", std::to_string(feat_max)}});
    } else if (app.got_subcommand(train)) {
      ensure_out_dir(out_dir);
      auto params = resolve_train_params(train_flags, cfg);
      auto matrix = guarnet::read_matrix_csv(train_matrix, train_map);
      auto model = guarnet::gbdt::train(matrix, params);
      guarnet::gbdt::save_model(model, out_path(out_dir, train_model));
      std::map<std::string, std::string> s;
      train_settings(params, s);
      s["matrix"] = train_matrix;
      write_manifest(out_dir, "train", {train_matrix, train_map}, {train_model}, s);
    } else if (app.got_subcommand(predict)) {
      ensure_out_dir(out_dir);
      auto model = guarnet::gbdt::load_model(pred_model);
      auto matrix = guarnet::read_matrix_csv(pred_matrix, pred_map);
      std::map<std::string, guarnet::FeatureCategory> category_of;
      for (std::size_t d = 0; d < matrix.dimension_names.size(); ++d)
        category_of[matrix.dimension_names[d]] = matrix.categories[d];
      std::vector<guarnet::FeatureCategory> cats;
      cats.reserve(model.dimension_names.size());
      for (const auto& name : model.dimension_names) {
        auto it = category_of.find(name);
        if (it == category_of.end())
          throw std::runtime_error("matrix " + pred_matrix + " lacks model dimension '" + name +
                                   "'");
        cats.push_back(it->second);
      }
      auto aligned = guarnet::align_to(matrix, model.dimension_names, cats);
      auto scores = guarnet::gbdt::predict_all(model, aligned);
      {
        std::ofstream out(out_path(out_dir, pred_out), std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + out_path(out_dir, pred_out));
        guarnet::csv::write_row(out, {"customer_id", "label", "score"});
        for (std::size_t i = 0; i < scores.size(); ++i)
          guarnet::csv::write_row(out, {aligned.instance_ids[i],
                                        std::to_string(aligned.labels[i]),
                                        guarnet::csv::format_double(scores[i])});
      }
      write_manifest(out_dir, "predict", {pred_model, pred_matrix, pred_map}, {pred_out},
                     {{"model", pred_model}, {"matrix", pred_matrix}});
    } else if (app.got_subcommand(rolling)) {
      ensure_out_dir(out_dir);
      resolve(roll_start_opt, cfg, "start", roll_start);
      resolve(roll_windows_opt, cfg, "windows", roll_windows);
      resolve(roll_threshold_opt, cfg, "recall_threshold", roll_threshold);
      resolve(roll_ablations_opt, cfg, "ablations", roll_ablations);
      resolve(roll_method_opt, cfg, "method", roll_method);
      resolve(roll_max_opt, cfg, "max_communities", roll_max);

      guarnet::RollingConfig rc;
      try {
        rc.start = guarnet::parse_quarter(roll_start);
      } catch (const std::exception&) {
        throw UsageError("--start: cannot parse '" + roll_start + "' (want e.g. 2013Q1)");
      }
      rc.n_windows = roll_windows;
      rc.recall_threshold = roll_threshold;
      rc.ablations = parse_ablation_list(roll_ablations);
      rc.community_method = parse_method(roll_method);
      rc.max_communities = roll_max;
      rc.train = resolve_train_params(roll_flags, cfg);

      auto ds = load_validated(data_dir);
      auto report = guarnet::run_rolling(ds, rc);
      {
        std::ofstream out(out_path(out_dir, "rolling.json"), std::ios::binary);
        out << guarnet::rolling_to_json(report).dump(2) << "\n";
      }
      guarnet::write_auc_csv(report, out_path(out_dir, "auc_by_window.csv"));
      guarnet::write_recall_csv(report, out_path(out_dir, "recall_by_window.csv"));
      guarnet::write_importance_csv(report, out_path(out_dir, "importance_by_window.csv"));

      std::map<std::string, std::string> s;
      train_settings(rc.train, s);
      s["start"] = roll_start;
      s["windows"] = std::to_string(rc.n_windows);
      s["recall_threshold"] = guarnet::csv::format_double(rc.recall_threshold);
      s["ablations"] = roll_ablations;
      s["method"] = roll_method;
      s["max_communities"] = std::to_string(rc.max_communities);
      write_manifest(out_dir, "rolling", {data_dir},
                     {"rolling.json", "auc_by_window.csv", "recall_by_window.csv",
                      "importance_by_window.csv"},
                     s);
    } else if (app.got_subcommand(selftest)) {
      return run_selftest();
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
