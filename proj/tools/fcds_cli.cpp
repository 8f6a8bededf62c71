// fcds: train / eval / predict / inspect-graph / grad-check / stats / synth

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcds/corpus/io.hpp"
#include "fcds/depgraph/stats.hpp"
#include "fcds/errors.hpp"
#include "fcds/eval/metrics.hpp"
#include "fcds/model/grad_suite.hpp"
#include "fcds/model/train.hpp"
#include "fcds/numerics/checkpoint.hpp"
#include "fcds/synth/generator.hpp"

namespace fs = std::filesystem;
using namespace fcds;

namespace {

constexpr double kGradTolerance = 1e-4;

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw UsageError(std::string(what) + " directory not found: " + p.string());
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw UsageError(std::string(what) + " not found: " + p.string());
}

void require_output_parent(const fs::path& p) {
  const auto parent = fs::absolute(p).parent_path();
  if (!fs::is_directory(parent)) throw UsageError("output directory does not exist: " + parent.string());
}

void require_split(const fs::path& corpus, const std::string& split) {
  for (const char* ext : {".jsonl", ".conllu", ".trees"}) require_file(corpus / (split + ext), "corpus file");
}

bool has_split(const fs::path& corpus, const std::string& split) {
  return fs::is_regular_file(corpus / (split + ".jsonl"));
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, config, out, log, train_split = "train", dev_split = "dev";
};

int cmd_train(const TrainArgs& a) {
  require_dir(a.corpus, "corpus");
  require_file(fs::path(a.corpus) / "relations.txt", "relation schema");
  require_split(a.corpus, a.train_split);
  if (!a.config.empty()) require_file(a.config, "config file");
  require_output_parent(a.out);
  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log.jsonl") : fs::path(a.log);
  require_output_parent(log_path);

  model::TrainConfig cfg;
  if (!a.config.empty()) cfg = model::parse_config(num::read_file(a.config));
  model::apply_seed_override(cfg);
  model::validate(cfg);

  const auto schema = corpus::load_schema(fs::path(a.corpus) / "relations.txt");
  const auto train_docs = corpus::load_split(a.corpus, a.train_split, schema);
  std::optional<std::vector<corpus::AnnotatedDocument>> dev;
  if (has_split(a.corpus, a.dev_split)) dev = corpus::load_split(a.corpus, a.dev_split, schema);

  const auto vocab = encoder::Vocabulary::build(train_docs, cfg.model.vocab_min_count);
  model::FcdsModel m(cfg.model, schema.size(), vocab.size(), cfg.seed);
  model::TrainOptions opts;
  if (dev) opts.dev = &*dev;
  opts.on_epoch = [](const model::EpochRecord& r) {
    std::cout << r.to_json().dump() << std::endl;
    return true;
  };
  const auto result = model::train(m, vocab, train_docs, cfg, opts);

  num::write_file_atomic(a.out, model::checkpoint_bytes(m, cfg, vocab, schema, result.steps));
  num::write_file_atomic(log_path, result.log_jsonl());
  std::cerr << "wrote " << a.out << " and " << log_path.string() << " (" << result.steps << " steps";
  if (result.best_epoch) std::cerr << ", best dev epoch " << *result.best_epoch;
  std::cerr << ")\n";
  return 0;
}

// --- eval / predict ---------------------------------------------------------

struct EvalArgs {
  std::string corpus, ckpt, split = "dev", out, train_split = "train";
};

int cmd_eval(const EvalArgs& a) {
  require_dir(a.corpus, "corpus");
  require_split(a.corpus, a.split);
  require_file(a.ckpt, "checkpoint");
  if (!a.out.empty()) require_output_parent(a.out);

  auto loaded = model::load_checkpoint(a.ckpt);
  const auto docs = corpus::load_split(a.corpus, a.split, loaded.schema);
  eval::TrainFactIndex train_index;
  if (a.split != a.train_split && has_split(a.corpus, a.train_split))
    train_index = eval::TrainFactIndex(corpus::load_split(a.corpus, a.train_split, loaded.schema));
  const auto preds = model::predict_corpus(*loaded.model, loaded.vocab, docs);
  const auto report = eval::evaluate(preds, docs, train_index);
  auto j = report.to_json();
  j["split"] = a.split;
  j["documents"] = docs.size();
  std::cout << j.dump() << "\n" << report.table();
  if (!a.out.empty()) num::write_file_atomic(a.out, j.dump(2) + "\n");
  return 0;
}

struct PredictArgs {
  std::string corpus, ckpt, split = "test", out;
};

int cmd_predict(const PredictArgs& a) {
  require_dir(a.corpus, "corpus");
  require_split(a.corpus, a.split);
  require_file(a.ckpt, "checkpoint");
  require_output_parent(a.out);

  auto loaded = model::load_checkpoint(a.ckpt);
  const auto docs = corpus::load_split(a.corpus, a.split, loaded.schema);
  const auto preds = model::predict_corpus(*loaded.model, loaded.vocab, docs);
  std::string text;
  for (const auto& p : preds.records())
    text += nlohmann::json{{"doc_id", p.doc_id},
                           {"h", p.subject},
                           {"t", p.object},
                           {"r", loaded.schema.name(p.relation)},
                           {"score", p.score}}
                .dump() +
            "\n";
  num::write_file_atomic(a.out, text);
  std::cerr << "wrote " << preds.size() << " predictions to " << a.out << "\n";
  return 0;
}

// --- inspect-graph / stats --------------------------------------------------

std::string stats_line(const char* name, const depgraph::DistanceStats& s) {
  std::ostringstream os;
  os << std::left << std::setw(20) << name << std::right << std::setw(8) << fixed(s.avg, 3) << std::setw(8)
     << fixed(s.std, 3) << std::setw(6) << s.max << std::setw(6) << s.min << std::setw(8) << s.pairs << std::setw(14)
     << s.disconnected << "\n";
  return os.str();
}

std::string stats_table(const std::vector<corpus::AnnotatedDocument>& docs) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "graph" << std::right << std::setw(8) << "avg" << std::setw(8) << "std"
     << std::setw(6) << "max" << std::setw(6) << "min" << std::setw(8) << "pairs" << std::setw(14) << "disconnected"
     << "\n";
  os << stats_line("with doc node", depgraph::graph_distance_stats(docs, true));
  os << stats_line("without doc node", depgraph::graph_distance_stats(docs, false));
  return os.str();
}

struct InspectArgs {
  std::string corpus, split = "train", doc, ckpt, config, out;
  std::uint64_t seed = 1;
};

int cmd_inspect(const InspectArgs& a) {
  require_dir(a.corpus, "corpus");
  require_file(fs::path(a.corpus) / "relations.txt", "relation schema");
  require_split(a.corpus, a.split);
  if (!a.ckpt.empty()) require_file(a.ckpt, "checkpoint");
  if (!a.config.empty()) require_file(a.config, "config file");
  if (!a.out.empty()) require_output_parent(a.out);

  std::optional<model::LoadedModel> loaded;
  corpus::LabelSchema schema;
  if (!a.ckpt.empty()) {
    loaded = model::load_checkpoint(a.ckpt);
    schema = loaded->schema;
  } else {
    schema = corpus::load_schema(fs::path(a.corpus) / "relations.txt");
  }
  const auto docs = corpus::load_split(a.corpus, a.split, schema);
  const corpus::AnnotatedDocument* doc = nullptr;
  for (const auto& d : docs)
    if (a.doc.empty() || d.doc_id == a.doc) {
      doc = &d;
      break;
    }
  if (!doc) throw UsageError("document not found in split " + a.split + ": " + a.doc);

  // Long-range edge weights need sentence vectors, so a model is required:
  // the checkpoint's when given, else a freshly initialized one.
  std::unique_ptr<model::FcdsModel> fresh;
  encoder::Vocabulary vocab;
  const model::FcdsModel* m = nullptr;
  if (loaded) {
    m = loaded->model.get();
    vocab = loaded->vocab;
  } else {
    model::TrainConfig cfg;
    if (!a.config.empty()) cfg = model::parse_config(num::read_file(a.config));
    vocab = encoder::Vocabulary::build(docs, cfg.model.vocab_min_count);
    fresh = std::make_unique<model::FcdsModel>(cfg.model, schema.size(), vocab.size(), a.seed);
    m = fresh.get();
  }
  const auto ctx = m->prepare(*doc, vocab);
  const auto& g = ctx.skeleton;
  const auto n = g.size();
  const auto adj = ctx.adjacency.values();

  std::ostringstream os;
  os << "# doc " << doc->doc_id << "\n";
  os << "nodes " << n << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nd = g.nodes[i];
    os << i << ' ' << depgraph::to_string(nd.kind);
    switch (nd.kind) {
      case depgraph::NodeKind::Token:
      case depgraph::NodeKind::RootToken:
        os << " sentence=" << nd.sentence << " token=" << nd.token << " form=" << doc->tokens()[nd.token]->surface;
        break;
      case depgraph::NodeKind::Mention:
        os << " sentence=" << nd.sentence << " entity=" << doc->entities[nd.entity].entity_id
           << " mention=" << nd.mention << " text=\"" << doc->mention_text(doc->entities[nd.entity].mentions[nd.mention])
           << "\"";
        break;
      case depgraph::NodeKind::Document: break;
    }
    os << "\n";
  }
  os << "edges " << g.edges.size() << "\n";
  for (const auto& e : g.edges)
    os << e.from << ' ' << e.to << ' ' << depgraph::to_string(e.kind) << ' ' << fixed(adj[e.from * n + e.to], 6)
       << (e.directed() ? " directed" : "") << "\n";
  const auto with = depgraph::graph_distance_stats({*doc}, true), without = depgraph::graph_distance_stats({*doc}, false);
  auto rec = [](const depgraph::DistanceStats& s) {
    return nlohmann::json{{"avg", s.avg},     {"std", s.std},     {"max", s.max},
                          {"min", s.min},     {"pairs", s.pairs}, {"disconnected", s.disconnected}};
  };
  os << "stats " << nlohmann::json{{"with_document_node", rec(with)}, {"without_document_node", rec(without)}}.dump()
     << "\n";

  if (a.out.empty())
    std::cout << os.str();
  else
    num::write_file_atomic(a.out, os.str());
  return 0;
}

struct StatsArgs {
  std::string corpus;
  std::vector<std::string> splits;
};

int cmd_stats(const StatsArgs& a) {
  require_dir(a.corpus, "corpus");
  require_file(fs::path(a.corpus) / "relations.txt", "relation schema");
  auto splits = a.splits;
  if (splits.empty())
    for (const char* s : {"train", "dev", "test"})
      if (has_split(a.corpus, s)) splits.push_back(s);
  if (splits.empty()) throw UsageError("no train/dev/test split found in " + a.corpus);
  for (const auto& s : splits) require_split(a.corpus, s);

  const auto schema = corpus::load_schema(fs::path(a.corpus) / "relations.txt");
  std::vector<corpus::AnnotatedDocument> docs;
  for (const auto& s : splits) {
    auto part = corpus::load_split(a.corpus, s, schema);
    docs.insert(docs.end(), part.begin(), part.end());
  }
  std::cout << "documents " << docs.size() << "\n" << stats_table(docs);
  return 0;
}

// --- grad-check / synth -----------------------------------------------------

struct GradArgs {
  std::optional<std::uint64_t> seed;
  std::string dims = "tiny";
};

int cmd_grad_check(const GradArgs& a) {
  std::uint64_t seed = 7;
  if (a.seed) {
    seed = *a.seed;
  } else {
    model::TrainConfig tmp;
    tmp.seed = seed;
    model::apply_seed_override(tmp);
    seed = tmp.seed;
  }
  model::ModelConfig dims = model::tiny_model_config();
  if (a.dims == "small") {
    dims.embedding_dim = dims.hidden_dim = 6;
    dims.tree_state_dim = dims.gcn_dim = 8;
    dims.const_hidden = dims.root_fusion_hidden = dims.pair_dim = dims.score_hidden = 6;
  } else if (a.dims != "tiny") {
    throw UsageError("--dims must be tiny or small");
  }
  const auto results = model::run_grad_suite(seed, dims);
  bool ok = true;
  std::cout << std::left << std::setw(22) << "component" << std::setw(14) << "max_rel_err" << std::setw(10) << "scalars"
            << "status\n";
  for (const auto& r : results) {
    const bool pass = r.max_rel_error <= kGradTolerance;
    ok = ok && pass;
    std::ostringstream err;
    err << std::scientific << std::setprecision(3) << r.max_rel_error;
    std::cout << std::left << std::setw(22) << r.component << std::setw(14) << err.str() << std::setw(10) << r.scalars
              << (pass ? "ok" : "FAIL") << "\n";
  }
  std::cout << "seed " << seed << ", dims " << a.dims << ", tolerance " << kGradTolerance << "\n";
  if (!ok) throw NumericError("gradient check failed");
  return 0;
}

struct SynthArgs {
  std::string out;
  std::size_t train = 20, dev = 0, test = 0;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  require_output_parent(a.out);
  const auto schema = synth::relation_schema();
  corpus::write_corpus(a.out, "train", synth::relation_corpus(a.train, a.seed, "train"), schema);
  if (a.dev) corpus::write_corpus(a.out, "dev", synth::relation_corpus(a.dev, a.seed + 1, "dev"), schema);
  if (a.test) corpus::write_corpus(a.out, "test", synth::relation_corpus(a.test, a.seed + 2, "test"), schema);
  std::cerr << "wrote synthetic corpus to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Syntax-fused document-level relation extraction"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint plus metric log");
  t->add_option("--corpus", train.corpus, "Corpus directory")->required();
  t->add_option("--config", train.config, "key = value config file");
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--log", train.log, "Metric log path (default <out>.log.jsonl)");
  t->add_option("--train-split", train.train_split, "Training split name");
  t->add_option("--dev-split", train.dev_split, "Dev split name, used when present");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  e->add_option("--corpus", ev.corpus, "Corpus directory")->required();
  e->add_option("--ckpt", ev.ckpt, "Checkpoint path")->required();
  e->add_option("--split", ev.split, "Split to evaluate");
  e->add_option("--out", ev.out, "Also write the report as JSON here");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Write predicted facts as line-delimited JSON");
  p->add_option("--corpus", pr.corpus, "Corpus directory")->required();
  p->add_option("--ckpt", pr.ckpt, "Checkpoint path")->required();
  p->add_option("--split", pr.split, "Split to predict");
  p->add_option("--out", pr.out, "Output path")->required();

  InspectArgs in;
  auto* ig = app.add_subcommand("inspect-graph", "Dump one document's syntax graph");
  ig->add_option("--corpus", in.corpus, "Corpus directory")->required();
  ig->add_option("--split", in.split, "Split name");
  ig->add_option("--doc", in.doc, "Document id (default: first)");
  ig->add_option("--ckpt", in.ckpt, "Checkpoint supplying sentence vectors");
  ig->add_option("--config", in.config, "Config for a fresh model when no checkpoint is given");
  ig->add_option("--seed", in.seed, "Seed for a fresh model");
  ig->add_option("--out", in.out, "Output path (default stdout)");

  GradArgs gr;
  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of every component");
  gc->add_option("--seed", gr.seed, "Seed (default FCDS_SEED or 7)");
  gc->add_option("--dims", gr.dims, "tiny or small");

  StatsArgs st;
  auto* s = app.add_subcommand("stats", "Entity-pair distance statistics with and without the document node");
  s->add_option("--corpus", st.corpus, "Corpus directory")->required();
  s->add_option("--split", st.splits, "Split(s) to include (default: all present)");

  SynthArgs sy;
  auto* sc = app.add_subcommand("synth", "Write the synthetic relation corpus");
  sc->add_option("--out", sy.out, "Output directory")->required();
  sc->add_option("--train", sy.train, "Training documents");
  sc->add_option("--dev", sy.dev, "Dev documents");
  sc->add_option("--test", sy.test, "Test documents");
  sc->add_option("--seed", sy.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(ev);
    if (*p) return cmd_predict(pr);
    if (*ig) return cmd_inspect(in);
    if (*gc) return cmd_grad_check(gr);
    if (*s) return cmd_stats(st);
    if (*sc) return cmd_synth(sy);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const NumericError& err) {
    std::cerr << "numeric error: " << err.what() << "\n";
    return 3;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return 2;
  } catch (const num::CheckpointError& err) {
    std::cerr << "checkpoint error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 1;
}
