// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fastdoc/fastdoc.hpp"

namespace fastdoc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;

struct MineOptions {
  std::string corpus;
  std::string mode = "customer_support";
  std::size_t count = 2000;
  std::uint64_t seed = 0;
  std::string strategy = "metadata";
  double pos_threshold = 0.35;
  double neg_threshold = 0.10;
  std::size_t truncate = 512;
  std::string out;
  std::string manifest;
};

struct DeriveOptions {
  std::string corpus;
  std::string mode = "derived";
  std::size_t levels = 3;
  std::size_t branching = 2;
  std::uint64_t seed = 0;
  std::string out;
  std::string assignments;
  std::string manifest;
};

struct ModelOptions {
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t d_ff = 64;
  std::size_t lower_layers = 2;
  std::size_t vocab = 8192;
  std::size_t max_positions = 128;
  std::size_t max_sentences = 64;
  std::size_t lora_rank = 0;
  std::vector<std::string> lora_targets{"query", "value"};
};

struct PretrainOptions {
  std::string corpus;
  std::string mode = "customer_support";
  std::string triplets;
  std::string taxonomy;
  std::string assignments;
  std::string word_vectors;
  std::string objective = "fastdoc";
  std::string loss = "both";
  std::size_t batch = 32;
  double lr = 5e-5;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  double max_grad_norm = 0;
  bool hier_on_negative = true;
  std::size_t drift_interval = 10;
  ModelOptions model;
  std::string out;
  std::string loss_log;
  std::string drift_log;
  std::string manifest;
};

struct FinetuneOptions {
  std::string checkpoint;
  std::string task = "span_qa";
  std::string train;
  std::string dev;
  std::size_t num_classes = 0;
  double lr = 3e-5;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  std::size_t batch = 8;
  std::size_t few_shot = 0;
  std::uint64_t seed = 0;
  double max_grad_norm = 0;
  std::string metrics;
  std::string out;
  std::string manifest;
};

struct AnalyzeOptions {
  std::string kind = "correlation";
  std::string checkpoint;
  std::string corpus;
  std::string mode = "derived";
  std::size_t max_docs = 20;
  std::uint64_t seed = 0;
  std::string doc_a;
  std::string doc_b;
  std::size_t bins = 10;
  std::string before;
  std::string after;
  std::string report;
  std::string csv;
  std::string manifest;
};

struct InspectOptions {
  std::string checkpoint;
  std::string out;
};

struct Options {
  MineOptions mine;
  DeriveOptions derive;
  PretrainOptions pretrain;
  FinetuneOptions finetune;
  AnalyzeOptions analyze;
  InspectOptions inspect;
};

/// Registers every subcommand and flag. Defaults are captured so that --help
/// prints them.
inline void configure(CLI::App& app, Options& o) {
  app.description("FastDoc: document-level pre-training and fine-tuning toolkit");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* mine = app.add_subcommand("mine", "Mine (anchor, positive, negative) document triplets");
  mine->add_option("--corpus", o.mine.corpus, "Corpus JSONL file")->required()->check(CLI::ExistingFile);
  mine->add_option("--mode", o.mine.mode, "Domain mode: customer_support, scientific, legal or derived");
  mine->add_option("--count", o.mine.count, "Triplets to sample (scientific and legal modes emit twice as many)");
  mine->add_option("--seed", o.mine.seed, "Run seed");
  mine->add_option("--strategy", o.mine.strategy, "Mining strategy: metadata or rouge");
  mine->add_option("--pos-threshold", o.mine.pos_threshold, "ROUGE-L F1 at or above which a pair is positive");
  mine->add_option("--neg-threshold", o.mine.neg_threshold, "ROUGE-L F1 at or below which a pair is negative");
  mine->add_option("--truncate", o.mine.truncate, "Tokens per document scored by ROUGE-L");
  mine->add_option("--out", o.mine.out, "Output triplet JSONL file")->required();
  mine->add_option("--manifest", o.mine.manifest, "Run manifest path (empty: <out>.manifest.json)");

  auto* derive = app.add_subcommand("derive-taxonomy", "Cluster a corpus into a category tree");
  derive->add_option("--corpus", o.derive.corpus, "Corpus JSONL file")->required()->check(CLI::ExistingFile);
  derive->add_option("--mode", o.derive.mode, "Domain mode of the corpus file");
  derive->add_option("--levels", o.derive.levels, "Maximum tree depth");
  derive->add_option("--branching", o.derive.branching, "Clusters per split");
  derive->add_option("--seed", o.derive.seed, "Run seed");
  derive->add_option("--out", o.derive.out, "Output taxonomy file")->required();
  derive->add_option("--assignments", o.derive.assignments,
                     "Output JSONL of per-document paths (empty: <out>.assignments.jsonl)");
  derive->add_option("--manifest", o.derive.manifest, "Run manifest path (empty: <out>.manifest.json)");

  auto* pre = app.add_subcommand("pretrain", "Document-level pre-training of the upper encoder");
  auto& p = o.pretrain;
  pre->add_option("--corpus", p.corpus, "Corpus JSONL file")->required()->check(CLI::ExistingFile);
  pre->add_option("--mode", p.mode, "Domain mode of the corpus file");
  pre->add_option("--triplets", p.triplets, "Triplet JSONL file")->required()->check(CLI::ExistingFile);
  pre->add_option("--taxonomy", p.taxonomy, "Taxonomy file (needed by the hierarchical loss)");
  pre->add_option("--assignments", p.assignments, "JSONL of per-document hierarchy paths overriding the corpus");
  pre->add_option("--word-vectors", p.word_vectors, "Word vectors for mapping free-text categories onto the taxonomy");
  pre->add_option("--objective", p.objective, "Objective: fastdoc, or mlm for the masked-token comparison arm");
  pre->add_option("--loss", p.loss, "Loss terms: triplet, hier or both");
  pre->add_option("--batch", p.batch, "Triplets per optimizer step");
  pre->add_option("--lr", p.lr, "Initial learning rate, decayed linearly to 0");
  pre->add_option("--epochs", p.epochs, "Passes over the triplets");
  pre->add_option("--seed", p.seed, "Run seed");
  pre->add_option("--max-grad-norm", p.max_grad_norm, "Gradient clipping norm (0: off)");
  pre->add_option("--hier-on-negative", p.hier_on_negative, "Also classify the negative document");
  pre->add_option("--drift-interval", p.drift_interval, "Steps between drift records");
  pre->add_option("--d-model", p.model.d_model, "Model width");
  pre->add_option("--num-heads", p.model.heads, "Attention heads per layer");
  pre->add_option("--layers", p.model.layers, "Upper encoder layers");
  pre->add_option("--d-ff", p.model.d_ff, "Feed-forward width");
  pre->add_option("--lower-layers", p.model.lower_layers, "Frozen lower encoder layers");
  pre->add_option("--vocab", p.model.vocab, "Hashed vocabulary size");
  pre->add_option("--max-positions", p.model.max_positions, "Token positions");
  pre->add_option("--max-sentences", p.model.max_sentences, "Sentences kept per document");
  pre->add_option("--lora-rank", p.model.lora_rank, "LoRA rank on the upper encoder (0: off)");
  pre->add_option("--lora-targets", p.model.lora_targets, "LoRA targets: query, key, value, output, ffn")
      ->delimiter(',');
  pre->add_option("--out", p.out, "Output checkpoint")->required();
  pre->add_option("--loss-log", p.loss_log, "Loss curve JSONL (empty: <out>.loss.jsonl)");
  pre->add_option("--drift-log", p.drift_log, "Drift report JSONL (empty: <out>.drift.jsonl)");
  pre->add_option("--manifest", p.manifest, "Run manifest path (empty: <out>.manifest.json)");

  auto* ft = app.add_subcommand("finetune", "Fine-tune a checkpoint on a token-input task");
  auto& f = o.finetune;
  ft->add_option("--checkpoint", f.checkpoint, "Input checkpoint")->required()->check(CLI::ExistingFile);
  ft->add_option("--task", f.task, "Task: span_qa, token_classification or pair_classification");
  ft->add_option("--train", f.train, "Training JSONL")->required()->check(CLI::ExistingFile);
  ft->add_option("--dev", f.dev, "Dev JSONL")->required()->check(CLI::ExistingFile);
  ft->add_option("--num-classes", f.num_classes, "Token classes (0: infer from the data)");
  ft->add_option("--lr", f.lr, "Initial learning rate, decayed linearly to 0");
  ft->add_option("--epochs", f.epochs, "Maximum epochs");
  ft->add_option("--patience", f.patience, "Epochs without dev improvement before stopping");
  ft->add_option("--batch", f.batch, "Examples per optimizer step");
  ft->add_option("--few-shot", f.few_shot, "Keep only the first N training examples (0: all)");
  ft->add_option("--seed", f.seed, "Run seed");
  ft->add_option("--max-grad-norm", f.max_grad_norm, "Gradient clipping norm (0: off)");
  ft->add_option("--metrics", f.metrics, "Output metrics JSON")->required();
  ft->add_option("--out", f.out, "Output fine-tuned checkpoint (empty: not written)");
  ft->add_option("--manifest", f.manifest, "Run manifest path (empty: <metrics>.manifest.json)");

  auto* an = app.add_subcommand("analyze", "Representation and drift analyses");
  auto& a = o.analyze;
  an->add_option("--kind", a.kind, "Analysis: correlation, wl, pca, paragraph or drift");
  an->add_option("--checkpoint", a.checkpoint, "Checkpoint (correlation, wl, pca)");
  an->add_option("--corpus", a.corpus, "Corpus JSONL (correlation, wl, pca)");
  an->add_option("--mode", a.mode, "Domain mode of the corpus file");
  an->add_option("--max-docs", a.max_docs, "Documents used, from the start of the corpus");
  an->add_option("--seed", a.seed, "Run seed");
  an->add_option("--doc-a", a.doc_a, "First text file (paragraph)");
  an->add_option("--doc-b", a.doc_b, "Second text file (paragraph)");
  an->add_option("--bins", a.bins, "Histogram bins (paragraph)");
  an->add_option("--before", a.before, "Earlier checkpoint (drift)");
  an->add_option("--after", a.after, "Later checkpoint (drift)");
  an->add_option("--report", a.report, "Output report JSON")->required();
  an->add_option("--csv", a.csv, "Output coordinates CSV (pca; empty: not written)");
  an->add_option("--manifest", a.manifest, "Run manifest path (empty: <report>.manifest.json)");

  auto* in = app.add_subcommand("inspect-checkpoint", "Print a checkpoint summary as JSON");
  in->add_option("--checkpoint", o.inspect.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  in->add_option("--out", o.inspect.out, "Write the summary here instead of stdout");
}

namespace detail {

inline std::string or_default(const std::string& v, const std::string& fallback) { return v.empty() ? fallback : v; }

/// Output files written by the current run; removed if the run fails.
class Outputs {
 public:
  explicit Outputs(std::string command = {}) : command_(std::move(command)) {}

  void write(const std::string& path, const std::string& bytes) {
    write_file_atomic(path, bytes);
    paths_.push_back(path);
    digests_[path] = digest_hex(bytes);
  }
  void remove_all() {
    for (const auto& p : paths_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    paths_.clear();
  }
  const std::map<std::string, std::string>& digests() const { return digests_; }
  const std::string& command() const { return command_; }

 private:
  std::string command_;
  std::vector<std::string> paths_;
  std::map<std::string, std::string> digests_;
};

class Manifest {
 public:
  Manifest(std::string subcommand, const CLI::App& sub) : start_(std::chrono::steady_clock::now()) {
    j_["subcommand"] = std::move(subcommand);
    nlohmann::json cfg = nlohmann::json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->get_name() == "--help") continue;
      const auto& results = opt->results();
      nlohmann::json v;
      if (!results.empty()) {
        v = results.size() == 1 ? nlohmann::json(results.front()) : nlohmann::json(results);
      } else {
        v = opt->get_default_str();
      }
      cfg[opt->get_single_name()] = v;
    }
    j_["config"] = cfg;
    j_["inputs"] = nlohmann::json::object();
  }
  void input(const std::string& path) {
    if (!path.empty()) j_["inputs"][path] = digest_hex(read_file(path));
  }
  nlohmann::json& extra() { return j_; }
  std::string finish(const Outputs& outputs) {
    j_["outputs"] = outputs.digests();
    j_["command"] = outputs.command();
    j_["timings"]["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return j_.dump(2) + "\n";
  }

 private:
  nlohmann::json j_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string jsonl(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream ss;
  writer(ss);
  return ss.str();
}

inline Corpus with_assignments(const Corpus& corpus, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::map<std::string, HierarchyPath> paths;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      paths[j.at("id").get<std::string>()] = j.at("hierarchy").get<HierarchyPath>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("assignments line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  Corpus out(corpus.mode());
  for (Document d : corpus.documents()) {
    if (auto it = paths.find(d.id); it != paths.end()) d.hierarchy = it->second;
    out.add(std::move(d));
  }
  return out;
}

inline Corpus with_mapped_categories(const Corpus& corpus, const Taxonomy& taxonomy, const WordVectors& wv) {
  Corpus out(corpus.mode());
  for (Document d : corpus.documents()) {
    if (!d.hierarchy && d.category) d.hierarchy = map_category_to_hierarchy(*d.category, taxonomy, wv);
    out.add(std::move(d));
  }
  return out;
}

inline int cmd_mine(const MineOptions& o, const CLI::App& sub, Outputs& outputs) {
  Manifest m("mine", sub);
  m.input(o.corpus);
  const Corpus corpus = load_corpus(o.corpus, parse_domain_mode(o.mode));
  std::vector<Triplet> triplets;
  if (o.strategy == "metadata") {
    triplets = mine_triplets_metadata(corpus, o.count, derive_seed(o.seed, "mine"));
  } else if (o.strategy == "rouge") {
    triplets = mine_triplets_rouge(corpus, o.count, derive_seed(o.seed, "mine"),
                                   {o.pos_threshold, o.neg_threshold, o.truncate});
  } else {
    throw ConfigError("unknown strategy '" + o.strategy + "' (expected metadata or rouge)");
  }
  outputs.write(o.out, jsonl([&](std::ostream& s) { write_triplets(s, triplets); }));
  m.extra()["counts"] = {{"documents", corpus.size()}, {"triplets", triplets.size()}};
  outputs.write(or_default(o.manifest, o.out + ".manifest.json"), m.finish(outputs));
  return kExitOk;
}

inline int cmd_derive(const DeriveOptions& o, const CLI::App& sub, Outputs& outputs) {
  Manifest m("derive-taxonomy", sub);
  m.input(o.corpus);
  const Corpus corpus = load_corpus(o.corpus, parse_domain_mode(o.mode));
  const auto derived = derive_taxonomy(corpus, o.levels, o.branching, derive_seed(o.seed, "derive-taxonomy"));
  outputs.write(o.out, jsonl([&](std::ostream& s) { derived.taxonomy.write(s); }));
  outputs.write(or_default(o.assignments, o.out + ".assignments.jsonl"), jsonl([&](std::ostream& s) {
                  for (const auto& d : corpus.documents()) {
                    s << nlohmann::json{{"id", d.id}, {"hierarchy", derived.paths.at(d.id)}}.dump() << '\n';
                  }
                }));
  m.extra()["counts"] = {{"documents", corpus.size()},
                         {"leaves", derived.taxonomy.leaves().size()},
                         {"depth", derived.taxonomy.depth()}};
  outputs.write(or_default(o.manifest, o.out + ".manifest.json"), m.finish(outputs));
  return kExitOk;
}

inline ModelConfig model_config(const ModelOptions& o, std::uint64_t seed, std::vector<std::size_t> level_classes) {
  ModelConfig c;
  c.d_model = o.d_model;
  c.num_heads = o.heads;
  c.num_layers = o.layers;
  c.d_ff = o.d_ff;
  c.lower_layers = o.lower_layers;
  c.vocab_size = o.vocab;
  c.max_positions = o.max_positions;
  c.max_sentences = o.max_sentences;
  c.seed = derive_seed(seed, "model");
  c.level_classes = std::move(level_classes);
  c.lora.rank = o.lora_rank;
  c.lora.targets = o.lora_targets;
  return c;
}

inline int cmd_pretrain(const PretrainOptions& o, const CLI::App& sub, Outputs& outputs) {
  Manifest m("pretrain", sub);
  for (const auto* path : {&o.corpus, &o.triplets, &o.taxonomy, &o.assignments, &o.word_vectors}) m.input(*path);
  Corpus corpus = load_corpus(o.corpus, parse_domain_mode(o.mode));
  const auto triplets = load_triplets(o.triplets);

  TrainConfig tc;
  tc.batch_size = o.batch;
  tc.initial_lr = o.lr;
  tc.epochs = o.epochs;
  tc.seed = derive_seed(o.seed, "pretrain");
  tc.loss = parse_loss_mode(o.loss);
  tc.hier_on_negative = o.hier_on_negative;
  if (o.max_grad_norm > 0) tc.max_grad_norm = o.max_grad_norm;
  tc.drift_interval = o.drift_interval;
  tc.validate();
  if (o.objective != "fastdoc" && o.objective != "mlm") {
    throw ConfigError("unknown objective '" + o.objective + "' (expected fastdoc or mlm)");
  }

  std::optional<Taxonomy> taxonomy;
  if (!o.taxonomy.empty()) taxonomy = Taxonomy::load(o.taxonomy);
  if (!o.assignments.empty()) corpus = with_assignments(corpus, o.assignments);
  if (!o.word_vectors.empty()) {
    if (!taxonomy) throw ConfigError("--word-vectors needs --taxonomy");
    corpus = with_mapped_categories(corpus, *taxonomy, WordVectors::load(o.word_vectors));
  }
  const bool hier = o.objective == "fastdoc" && uses_hier(tc.loss);
  if (hier && !taxonomy) throw ConfigError("--loss " + o.loss + " needs --taxonomy");
  LabelMap labels;
  std::vector<std::size_t> level_classes;
  if (taxonomy) {
    labels = hierarchy_labels(corpus, *taxonomy);
    level_classes = taxonomy->class_counts();
  }

  FastDocModel<float> model(model_config(o.model, o.seed, level_classes));
  nlohmann::json run = {{"objective", o.objective}, {"train", tc.to_json()}};
  std::vector<LossRecord> curve;
  std::vector<DriftReport> drift;
  std::int64_t steps = 0;
  std::optional<AdamWState<float>> opt;
  if (o.objective == "fastdoc") {
    auto r = pretrain(model, corpus, triplets, labels, tc);
    curve = std::move(r.curve);
    drift = std::move(r.drift);
    steps = r.steps;
    opt = std::move(r.optimizer);
  } else {
    auto r = mlm_pretrain(model, corpus, pretrain_steps(triplets.size(), tc.batch_size, tc.epochs), tc);
    curve = std::move(r.curve);
    drift = std::move(r.drift);
    steps = r.steps;
  }
  const Checkpoint ckpt = make_checkpoint(model, opt ? &*opt : nullptr, run);
  outputs.write(o.out, serialize_checkpoint(ckpt));
  outputs.write(or_default(o.loss_log, o.out + ".loss.jsonl"), jsonl([&](std::ostream& s) { write_loss_log(s, curve); }));
  outputs.write(or_default(o.drift_log, o.out + ".drift.jsonl"),
                jsonl([&](std::ostream& s) { write_drift_log(s, drift); }));
  m.extra()["timings"]["steps"] = steps;
  outputs.write(or_default(o.manifest, o.out + ".manifest.json"), m.finish(outputs));
  return kExitOk;
}

inline nlohmann::json metrics_json(const std::map<std::string, double>& metrics) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : metrics) j[k] = v;
  return j;
}

inline int cmd_finetune(const FinetuneOptions& o, const CLI::App& sub, Outputs& outputs) {
  Manifest m("finetune", sub);
  for (const auto* path : {&o.checkpoint, &o.train, &o.dev}) m.input(*path);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const FastDocModel<float> base = model_from_checkpoint(ckpt);
  FinetuneConfig fc;
  fc.lr = o.lr;
  fc.max_epochs = o.epochs;
  fc.patience = o.patience;
  fc.batch_size = o.batch;
  fc.seed = derive_seed(o.seed, "finetune");
  if (o.max_grad_norm > 0) fc.max_grad_norm = o.max_grad_norm;
  fc.validate();
  auto few = [&](auto v) {
    if (o.few_shot > 0 && v.size() > o.few_shot) v.resize(o.few_shot);
    return v;
  };
  auto train_in = fastdoc::detail::open_input(o.train);
  auto dev_in = fastdoc::detail::open_input(o.dev);
  FinetuneResult r = [&] {
    if (o.task == "span_qa") return finetune_span_qa(base, few(parse_span_qa(train_in)), parse_span_qa(dev_in), fc);
    if (o.task == "token_classification") {
      const auto train = few(parse_token_tagging(train_in));
      const auto dev = parse_token_tagging(dev_in);
      std::size_t classes = o.num_classes;
      if (classes == 0) {
        for (const auto* set : {&train, &dev})
          for (const auto& s : *set)
            for (auto t : s.tags) classes = std::max(classes, t + 1);
      }
      return finetune_token_classification(base, train, dev, classes, fc);
    }
    if (o.task == "pair_classification") return finetune_pair_classification(base, few(parse_pairs(train_in)), parse_pairs(dev_in), fc);
    throw ConfigError("unknown task '" + o.task + "' (expected span_qa, token_classification or pair_classification)");
  }();
  const nlohmann::json report = {{"task", o.task},
                                 {"config", fc.to_json()},
                                 {"metrics", metrics_json(r.metrics)},
                                 {"dev_history", r.dev_history},
                                 {"best_epoch", r.best_epoch},
                                 {"epochs_run", r.epochs_run}};
  outputs.write(o.metrics, report.dump(2) + "\n");
  if (!o.out.empty()) {
    nlohmann::json run = ckpt.config;
    run["finetune"] = {{"task", o.task}, {"config", fc.to_json()}};
    outputs.write(o.out, serialize_checkpoint(make_checkpoint(r.model, nullptr, run)));
  }
  outputs.write(or_default(o.manifest, o.metrics + ".manifest.json"), m.finish(outputs));
  return kExitOk;
}

inline std::vector<Document> first_docs(const Corpus& corpus, std::size_t max_docs) {
  const auto& all = corpus.documents();
  return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(max_docs, all.size()))};
}

inline int cmd_analyze(const AnalyzeOptions& o, const CLI::App& sub, Outputs& outputs) {
  Manifest m("analyze", sub);
  nlohmann::json report{{"kind", o.kind}};
  auto need = [&](const std::string& v, const char* flag) {
    if (v.empty()) throw ConfigError("--kind " + o.kind + " needs " + flag);
    m.input(v);
  };
  if (o.kind == "correlation" || o.kind == "wl" || o.kind == "pca") {
    need(o.checkpoint, "--checkpoint");
    need(o.corpus, "--corpus");
    const auto model = model_from_checkpoint(load_checkpoint(o.checkpoint));
    const auto docs = first_docs(load_corpus(o.corpus, parse_domain_mode(o.mode)), o.max_docs);
    if (o.kind == "correlation") {
      const auto r = representation_correlation(docs, model);
      report["pearson_r"] = r.defined ? nlohmann::json(r.r) : nlohmann::json(nullptr);
      report["defined"] = r.defined;
      report["pairs"] = r.pairs;
    } else if (o.kind == "wl") {
      if (docs.size() < 2) throw ValidationError("wl analysis needs at least 2 documents");
      for (auto [mode, name] : {std::pair{EmbeddingMode::Sentence, "sentence"}, {EmbeddingMode::Token, "token"}}) {
        std::vector<double> values;
        for (std::size_t i = 0; i + 1 < docs.size(); ++i) values.push_back(wl_metric(docs[i], docs[i + 1], mode, model));
        report["wl"][name] = values;
      }
    } else {
      Matrix vecs;
      for (const auto& d : docs) vecs.push_back(to_matrix(model.encode_document(d.sentences)).front());
      const auto p = pca_project(vecs, 2, derive_seed(o.seed, "pca"));
      report["explained_variance_ratio"] = p.explained_variance_ratio;
      report["coordinates"] = p.coordinates;
      if (!o.csv.empty()) {
        std::ostringstream csv;
        csv << "id,pc1,pc2\n";
        for (std::size_t i = 0; i < docs.size(); ++i) {
          csv << docs[i].id << ',' << p.coordinates[i][0] << ',' << p.coordinates[i][1] << '\n';
        }
        outputs.write(o.csv, csv.str());
      }
    }
  } else if (o.kind == "paragraph") {
    need(o.doc_a, "--doc-a");
    need(o.doc_b, "--doc-b");
    const auto r = paragraph_similarity(read_file(o.doc_a), read_file(o.doc_b), o.bins);
    report["scores"] = r.scores;
    report["histogram"] = {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}};
    report["median"] = median(r.scores);
  } else if (o.kind == "drift") {
    need(o.before, "--before");
    need(o.after, "--after");
    report["drift"] = drift_to_json(track_drift(load_checkpoint(o.before), load_checkpoint(o.after)));
  } else {
    throw ConfigError("unknown analysis '" + o.kind + "' (expected correlation, wl, pca, paragraph or drift)");
  }
  outputs.write(o.report, report.dump(2) + "\n");
  outputs.write(or_default(o.manifest, o.report + ".manifest.json"), m.finish(outputs));
  return kExitOk;
}

inline int cmd_inspect(const InspectOptions& o, Outputs& outputs) {
  const Checkpoint c = load_checkpoint(o.checkpoint);
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t params = 0;
  for (const auto& t : c.tensors) {
    tensors.push_back({{"name", t.name}, {"group", t.group}, {"shape", t.shape}, {"frozen", t.frozen}});
    params += t.values.size();
  }
  std::ostringstream digest;
  digest << std::hex << std::setw(16) << std::setfill('0') << c.digest;
  const nlohmann::json j{{"version", c.version},
                         {"digest", digest.str()},
                         {"config", c.config},
                         {"parameters", params},
                         {"optimizer_state", c.optimizer.has_value()},
                         {"tensors", tensors}};
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    outputs.write(o.out, j.dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace detail

/// Parses arguments, runs one subcommand and maps failures onto exit codes:
/// 2 configuration or usage, 3 data, 4 numeric, 5 I/O, 1 anything else.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"fastdoc"};
  app.name("fastdoc");
  Options o;
  configure(app, o);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::Config);
  }
  std::string command;
  for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);
  detail::Outputs outputs(command);
  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "mine") return detail::cmd_mine(o.mine, *sub, outputs);
    if (name == "derive-taxonomy") return detail::cmd_derive(o.derive, *sub, outputs);
    if (name == "pretrain") return detail::cmd_pretrain(o.pretrain, *sub, outputs);
    if (name == "finetune") return detail::cmd_finetune(o.finetune, *sub, outputs);
    if (name == "analyze") return detail::cmd_analyze(o.analyze, *sub, outputs);
    return detail::cmd_inspect(o.inspect, outputs);
  } catch (const Error& e) {
    outputs.remove_all();
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    outputs.remove_all();
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace fastdoc::cli
