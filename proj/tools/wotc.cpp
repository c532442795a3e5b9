// wotc: open-world text classification from the command line.
//
//   wotc prepare --corpus data.jsonl --shots 10 --seen-fraction 0.5 --seed 42
//   wotc run     --corpus data.jsonl --supervision out/supervision.json
//   wotc eval    --predictions out/predictions.tsv --corpus data.jsonl --supervision out/supervision.json
//   wotc report  --history out/history.json

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "wot/corpus.hpp"
#include "wot/embedding.hpp"
#include "wot/evaluation.hpp"
#include "wot/pipeline.hpp"
#include "wot/refine.hpp"

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
  const char* env = std::getenv("WOT_OUTPUT_DIR");
  return env && *env ? env : "wot_out";
}

struct PrepareArgs {
  std::string corpus;
  std::size_t shots = 10;
  double seen_fraction = 0.5;
  std::uint64_t seed = 42;
  double delta = 0.0;
  std::uint64_t class_order_seed = 0;
  std::string out_dir;
};

struct RunArgs {
  std::string corpus;
  std::string supervision;
  std::string embeddings;
  std::string embedding_mode;
  std::string save_embeddings;
  std::size_t dim = 64;
  std::size_t window = 5;
  std::size_t max_vocab = 20000;
  std::string out_dir;
  wot::RefineConfig refine;
};

struct EvalArgs {
  std::string predictions;
  std::string corpus;
  std::string supervision;
  std::string out_dir;
};

struct ReportArgs {
  std::string history;
};

void print_class_table(const wot::Corpus& corpus, const wot::Supervision& s) {
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const auto& [label, n] : corpus.class_counts()) counts.emplace_back(label, n);
  std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::printf("%-24s %8s  %s\n", "class", "docs", "split");
  for (const auto& [label, n] : counts) {
    std::printf("%-24s %8zu  %s\n", label.c_str(), n, s.seen_class_names.count(label) ? "seen" : "unseen");
  }
  std::printf("total: %zu documents, %zu classes, %zu seen\n", corpus.num_docs(), counts.size(),
              s.seen_class_names.size());
}

int cmd_prepare(const PrepareArgs& a) {
  if (a.delta < 0.0 || a.delta >= 1.0) throw UsageError("--delta must lie in [0, 1)");
  if (a.shots == 0) throw UsageError("--shots must be positive");
  if (!(a.seen_fraction > 0.0 && a.seen_fraction <= 1.0)) throw UsageError("--seen-fraction must lie in (0, 1]");
  auto corpus = wot::load_corpus(a.corpus);
  std::filesystem::create_directories(a.out_dir);
  if (a.delta > 0.0) {
    try {
      corpus = wot::make_imbalanced(corpus, a.delta, a.class_order_seed);
    } catch (const wot::ValidationError& e) {
      throw UsageError(e.what());
    }
    std::ofstream out(std::filesystem::path(a.out_dir) / "corpus.imbalanced.jsonl");
    wot::write_corpus_jsonl(corpus, out);
  }
  wot::Supervision s;
  try {
    s = wot::make_open_world_split(corpus, a.seen_fraction, a.shots, a.seed);
  } catch (const wot::ValidationError& e) {
    throw UsageError(e.what());
  }
  std::ofstream out(std::filesystem::path(a.out_dir) / "supervision.json");
  wot::write_supervision_json(s, out);
  print_class_table(corpus, s);
  return 0;
}

int cmd_run(RunArgs a) {
  const auto corpus = wot::load_corpus(a.corpus);
  const auto supervision = wot::load_supervision(a.supervision);
  std::string mode = a.embedding_mode.empty() ? (a.embeddings.empty() ? "fallback" : "imported") : a.embedding_mode;
  std::optional<wot::EmbeddingTable> table;
  if (mode == "imported") {
    if (a.embeddings.empty()) throw UsageError("--embedding-mode imported needs --embeddings");
    table = wot::load_embedding_table(a.embeddings);
  } else {
    wot::FallbackOptions fo;
    fo.dim = a.dim;
    fo.window = a.window;
    fo.seed = a.refine.seed;
    fo.max_vocab = a.max_vocab;
    table = wot::fallback_embeddings(corpus, fo);
  }
  if (!a.save_embeddings.empty()) wot::save_embedding_table(*table, a.save_embeddings);

  wot::PipelineResult result;
  try {
    result = wot::run_pipeline(corpus, supervision, *table, a.refine);
  } catch (const wot::DegenerateError& e) {
    std::cerr << "refinement aborted: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  wot::write_run_outputs(result, a.out_dir);
  const auto& st = result.refinement.state;
  std::printf("iterations: %zu, clusters:", st.records.size());
  for (auto n : st.history) std::printf(" %zu", n);
  std::printf(" -> %zu\n", st.clusters.size());
  for (const auto& [id, words] : result.class_words) {
    std::printf("%s:", id.c_str());
    for (const auto& w : words) std::printf(" %s", w.c_str());
    std::printf("\n");
  }
  std::printf("outputs written to %s\n", a.out_dir.c_str());
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  const auto predictions = wot::load_assignments_tsv(a.predictions);
  const auto corpus = wot::load_corpus(a.corpus);
  const auto supervision = wot::load_supervision(a.supervision);
  std::set<std::string> labeled;
  for (const auto& [label, ids] : supervision.labeled_examples) labeled.insert(ids.begin(), ids.end());
  const auto gold = wot::gold_labels(corpus);

  std::vector<std::string> offenders;
  wot::Assignments evaluated;
  std::set<std::string> predicted_ids;
  for (const auto& [doc, cls] : predictions) {
    predicted_ids.insert(doc);
    if (!gold.count(doc)) {
      offenders.push_back(doc);
      continue;
    }
    if (!labeled.count(doc)) evaluated.emplace_back(doc, cls);
  }
  for (const auto& [doc, label] : gold) {
    if (!predicted_ids.count(doc)) offenders.push_back(doc);
  }
  if (!offenders.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, offenders.size()); ++i) list += " " + offenders[i];
    std::cerr << "error: " << offenders.size() << " document ids do not align between predictions and corpus:"
              << list << '\n';
    return kRuntimeFailure;
  }
  std::set<std::string> seen;
  for (const auto& [label, name] : supervision.seen_class_names) seen.insert(label);
  const auto report = wot::evaluate(evaluated, gold, seen);
  std::filesystem::create_directories(a.out_dir);
  {
    std::ofstream f(std::filesystem::path(a.out_dir) / "report.json");
    f << report.to_json().dump(2) << '\n';
  }
  {
    std::ofstream f(std::filesystem::path(a.out_dir) / "report.txt");
    f << report.to_table();
  }
  std::cout << report.to_table();
  return 0;
}

int cmd_report(const ReportArgs& a) {
  std::ifstream in(a.history);
  if (!in) throw UsageError("cannot open " + a.history);
  const auto j = nlohmann::json::parse(in);
  std::printf("%-5s %-3s %8s %8s  %s\n", "iter", "T", "before", "after", "removed");
  for (const auto& it : j.at("iterations")) {
    std::string removed;
    for (const auto& c : it.at("clusters")) {
      if (c.at("removed").get<bool>()) removed += " " + c.at("id").get<std::string>();
    }
    std::printf("%-5zu %-3zu %8zu %8zu %s\n", it.at("iteration").get<std::size_t>(), it.at("top_t").get<std::size_t>(),
                it.at("clusters_before").get<std::size_t>(), it.at("clusters_after").get<std::size_t>(),
                removed.c_str());
  }
  if (!j.at("iterations").empty()) {
    std::printf("\nfinal clusters:\n");
    for (const auto& c : j.at("iterations").back().at("clusters")) {
      if (c.at("removed").get<bool>()) continue;
      std::printf("  %s size=%zu eta=%.4f%s:", c.at("id").get<std::string>().c_str(), c.at("size").get<std::size_t>(),
                  c.at("coherence").get<double>(), c.at("pinned").get<bool>() ? " (seen)" : "");
      for (const auto& w : c.at("class_words")) std::printf(" %s", w.get<std::string>().c_str());
      std::printf("\n");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-world weakly supervised text classification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; flags override it");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  PrepareArgs prep;
  prep.out_dir = default_out_dir();
  auto* p = app.add_subcommand("prepare", "Build the few-shot open-world split (optionally imbalanced)");
  p->add_option("--corpus", prep.corpus, "Labeled corpus (JSON lines)")->required()->check(CLI::ExistingFile);
  p->add_option("--shots", prep.shots, "Labeled documents per seen class")->capture_default_str();
  p->add_option("--seen-fraction", prep.seen_fraction, "Fraction of classes that are seen")->capture_default_str();
  p->add_option("--seed", prep.seed, "Sampling seed")->capture_default_str();
  p->add_option("--delta", prep.delta, "Linear per-class retention decrement")->capture_default_str();
  p->add_option("--class-order-seed", prep.class_order_seed, "Seed of the imbalance class order")->capture_default_str();
  p->add_option("--out-dir", prep.out_dir, "Output directory (env WOT_OUTPUT_DIR)")->capture_default_str();

  RunArgs run;
  run.out_dir = default_out_dir();
  auto* r = app.add_subcommand("run", "Discover classes, pseudo-label and classify the corpus");
  r->add_option("--corpus", run.corpus, "Corpus (JSON lines)")->required()->check(CLI::ExistingFile);
  r->add_option("--supervision", run.supervision, "Supervision JSON from 'prepare'")->required()->check(CLI::ExistingFile);
  r->add_option("--embeddings", run.embeddings, "WOTEMB1 embedding table")->check(CLI::ExistingFile);
  r->add_option("--embedding-mode", run.embedding_mode, "imported or fallback")
      ->check(CLI::IsMember({"imported", "fallback"}));
  r->add_option("--save-embeddings", run.save_embeddings, "Write the table used to this path");
  r->add_option("--dim", run.dim, "Fallback embedding dimension")->capture_default_str();
  r->add_option("--window", run.window, "Fallback co-occurrence window")->capture_default_str();
  r->add_option("--max-vocab", run.max_vocab, "Fallback vocabulary cap")->capture_default_str();
  r->add_option("--k", run.refine.k, "Initial class count")->capture_default_str();
  r->add_option("--w", run.refine.w, "Representative words per cluster")->capture_default_str();
  r->add_option("--beta", run.refine.beta, "Indicativeness cutoff ratio")->capture_default_str();
  r->add_option("--tau", run.refine.tau, "Document representation temperature")->capture_default_str();
  r->add_option("--t-cap", run.refine.t_cap, "Maximum class-words compared per cluster")->capture_default_str();
  r->add_option("--top-m", run.refine.top_m, "Statistical candidates per cluster")->capture_default_str();
  r->add_option("--seed", run.refine.seed, "Seed")->capture_default_str();
  r->add_option("--out-dir", run.out_dir, "Output directory (env WOT_OUTPUT_DIR)")->capture_default_str();

  EvalArgs ev;
  ev.out_dir = default_out_dir();
  auto* e = app.add_subcommand("eval", "Score predictions with the matching-based F1 protocol");
  e->add_option("--predictions", ev.predictions, "predictions.tsv")->required()->check(CLI::ExistingFile);
  e->add_option("--corpus", ev.corpus, "Gold corpus")->required()->check(CLI::ExistingFile);
  e->add_option("--supervision", ev.supervision, "Supervision JSON")->required()->check(CLI::ExistingFile);
  e->add_option("--out-dir", ev.out_dir, "Report directory (env WOT_OUTPUT_DIR)")->capture_default_str();

  ReportArgs rep;
  auto* h = app.add_subcommand("report", "Summarize the per-iteration history of a run");
  h->add_option("--history", rep.history, "history.json from 'run'")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsageError;
  }
  wot::set_warnings_enabled(!quiet);

  try {
    if (*p) return cmd_prepare(prep);
    if (*r) {
      if (!(run.refine.beta > 0.0 && run.refine.beta <= 1.0)) throw UsageError("--beta must lie in (0, 1]");
      return cmd_run(run);
    }
    if (*e) return cmd_eval(ev);
    if (*h) return cmd_report(rep);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return kUsageError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}
