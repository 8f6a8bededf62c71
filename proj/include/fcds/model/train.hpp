#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcds/corpus/types.hpp"
#include "fcds/encoder/vocabulary.hpp"
#include "fcds/errors.hpp"
#include "fcds/eval/metrics.hpp"
#include "fcds/model/config.hpp"
#include "fcds/model/loss.hpp"
#include "fcds/model/model.hpp"
#include "fcds/model/optimizer.hpp"
#include "fcds/numerics/checkpoint.hpp"

namespace fcds::model {

// Sum of margin losses over every ordered entity pair of the document.
inline Tensor document_loss(const FcdsModel& model, const DocumentContext& ctx, double margin) {
  const auto& doc = *ctx.doc;
  Tensor total;
  for (std::size_t s = 0; s < doc.entities.size(); ++s)
    for (std::size_t o = 0; o < doc.entities.size(); ++o) {
      if (s == o) continue;
      const Tensor l = margin_loss(model.score_pair(ctx, s, o).z_final, gold_classes(doc, s, o), margin);
      if (!std::isfinite(l.item()))
        throw NumericError("doc " + doc.doc_id + " pair (" + std::to_string(doc.entities[s].entity_id) + ", " +
                           std::to_string(doc.entities[o].entity_id) + "): non-finite loss");
      total = total.defined() ? num::add(total, l) : l;
    }
  return total.defined() ? total : Tensor::scalar(0.0);
}

inline void predict_document(const FcdsModel& model, const encoder::Vocabulary& vocab,
                             const corpus::AnnotatedDocument& doc, eval::PredictionSet& out) {
  const auto ctx = model.prepare(doc, vocab);
  for (std::size_t s = 0; s < doc.entities.size(); ++s)
    for (std::size_t o = 0; o < doc.entities.size(); ++o) {
      if (s == o) continue;
      const Tensor z = model.score_pair(ctx, s, o).z_final;
      const auto na = z.numel() - 1;
      for (auto r : predict(z))
        out.insert({doc.doc_id, doc.entities[s].entity_id, doc.entities[o].entity_id, r, z[r] - z[na]});
    }
}

inline eval::PredictionSet predict_corpus(const FcdsModel& model, const encoder::Vocabulary& vocab,
                                          const std::vector<corpus::AnnotatedDocument>& docs) {
  eval::PredictionSet out;
  for (const auto& d : docs) predict_document(model, vocab, d, out);
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0;
  std::optional<double> dev_f1, dev_ign_f1;
  double eta = 1.0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"epoch", epoch}, {"loss", loss}, {"dev_f1", nullptr}, {"dev_ign_f1", nullptr}, {"eta", eta}};
    if (dev_f1) j["dev_f1"] = *dev_f1;
    if (dev_ign_f1) j["dev_ign_f1"] = *dev_ign_f1;
    return j;
  }
};

struct TrainOptions {
  const std::vector<corpus::AnnotatedDocument>* dev = nullptr;
  // Called after every epoch; returning false stops training.
  std::function<bool(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t steps = 0;
  std::optional<std::size_t> best_epoch;  // set when a dev split drove early stopping

  std::string log_jsonl() const {
    std::string out;
    for (const auto& r : log) out += r.to_json().dump() + "\n";
    return out;
  }
};

// One optimizer step per `accum_docs` documents. Document order is
// reshuffled every epoch from the config seed. With a dev split, training
// stops after `patience` epochs without a dev F1 improvement and the best
// parameters are restored.
inline TrainResult train(FcdsModel& model, const encoder::Vocabulary& vocab,
                         const std::vector<corpus::AnnotatedDocument>& docs, const TrainConfig& cfg,
                         const TrainOptions& opts = {}) {
  validate(cfg);
  TrainResult result;
  if (docs.empty() || cfg.epochs == 0) return result;
  const auto steps_per_epoch = (docs.size() + cfg.accum_docs - 1) / cfg.accum_docs;
  const auto total_steps = steps_per_epoch * cfg.epochs;
  AdamW opt(model.parameters(), {cfg.weight_decay});
  num::Rng order_rng(cfg.seed ^ 0x5eedULL);
  eval::TrainFactIndex train_index;
  if (opts.dev) train_index = eval::TrainFactIndex(docs);

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  double best_f1 = -1;
  std::size_t since_best = 0;
  std::vector<std::vector<double>> best_params;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0;
    model.parameters().zero_grad();
    std::size_t pending = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& doc = docs[order[i]];
      const auto ctx = model.prepare(doc, vocab);
      const Tensor loss = document_loss(model, ctx, cfg.margin);
      epoch_loss += loss.item();
      if (loss.requires_grad()) num::backward(loss);
      if (++pending == cfg.accum_docs || i + 1 == order.size()) {
        ++result.steps;
        opt.step(scheduled_lr(result.steps, total_steps, cfg.warmup_ratio, cfg.learning_rate));
        model.parameters().zero_grad();
        pending = 0;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss;
    rec.eta = model.eta().item();
    if (opts.dev) {
      const auto preds = predict_corpus(model, vocab, *opts.dev);
      rec.dev_f1 = eval::micro_f1(preds, *opts.dev).f1;
      rec.dev_ign_f1 = eval::ign_f1(preds, *opts.dev, train_index).f1;
    }
    result.log.push_back(rec);
    const bool keep_going = !opts.on_epoch || opts.on_epoch(rec);

    if (opts.dev) {
      if (*rec.dev_f1 > best_f1) {
        best_f1 = *rec.dev_f1;
        result.best_epoch = epoch;
        best_params = model.snapshot();
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
    if (!keep_going) break;
  }
  if (!best_params.empty()) model.restore(best_params);
  return result;
}

// Checkpoint = parameters plus what is needed to rebuild the model:
// canonical config text, vocabulary and relation names.
inline std::string checkpoint_bytes(const FcdsModel& model, const TrainConfig& cfg, const encoder::Vocabulary& vocab,
                                    const corpus::LabelSchema& schema, std::uint64_t step) {
  const auto text = to_text(cfg);
  std::string relations;
  for (const auto& n : schema.names()) relations += n + "\n";
  return num::serialize_checkpoint({cfg.seed, step, num::fnv1a64(text)},
                                   {{"config", text}, {"vocab", vocab.serialize()}, {"relations", relations}},
                                   model.parameters());
}

struct LoadedModel {
  TrainConfig config;
  encoder::Vocabulary vocab;
  corpus::LabelSchema schema;
  std::unique_ptr<FcdsModel> model;
};

inline LoadedModel load_checkpoint(const std::filesystem::path& path) {
  const auto ck = num::parse_checkpoint(num::read_file(path));
  auto meta = [&ck](const char* key) {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw num::CheckpointError(std::string("checkpoint lacks '") + key + "' section");
    return it->second;
  };
  LoadedModel out;
  out.config = parse_config(meta("config"));
  out.vocab = encoder::Vocabulary::deserialize(meta("vocab"));
  std::vector<std::string> names;
  std::istringstream in(meta("relations"));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) names.push_back(line);
  out.schema = corpus::LabelSchema(names);
  out.model = std::make_unique<FcdsModel>(out.config.model, out.schema.size(), out.vocab.size(), out.config.seed);
  num::load_into(ck, out.model->parameters());
  return out;
}

}  // namespace fcds::model
