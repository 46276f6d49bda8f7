// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

namespace fastdoc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  if (!o.pass) ++g_failures;
  std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Shared desk-scale setup: 3 lexical categories, 20 training documents and 10
// held-out documents per category.
struct DeskScale {
  SyntheticCorpus sc;
  Corpus train{DomainMode::CustomerSupport};
  Corpus held_out{DomainMode::CustomerSupport};
  std::vector<std::size_t> train_category;
  std::vector<Triplet> triplets;
  LabelMap labels;

  explicit DeskScale(std::uint64_t seed = 0) {
    SyntheticCorpusSpec spec;
    spec.docs_per_category = 30;
    spec.seed = seed;
    sc = make_synthetic_corpus(spec, DomainMode::CustomerSupport);
    for (std::size_t i = 0; i < sc.corpus.size(); ++i) {
      const auto& id = sc.corpus[i].id;
      const int index = std::stoi(id.substr(id.rfind('-') + 1));
      if (index < 20) {
        train.add(sc.corpus[i]);
        train_category.push_back(sc.category_of[i]);
      } else {
        held_out.add(sc.corpus[i]);
      }
    }
    triplets = mine_triplets_metadata(train, 200, derive_seed(seed, "triplets"));
    labels = hierarchy_labels(sc.corpus, sc.taxonomy);
  }

  ModelConfig model_config() const {
    ModelConfig c;
    c.level_classes = sc.taxonomy.class_counts();
    return c;
  }

  static TrainConfig recipe() {
    TrainConfig tc;
    tc.batch_size = 32;
    tc.initial_lr = 5e-5;
    tc.epochs = 5;
    return tc;
  }
};

std::pair<double, double> intra_inter_cosine(const FastDocModel<float>& m, const Corpus& docs,
                                             const std::vector<std::size_t>& category) {
  std::vector<Tensor<float>> v;
  for (const auto& d : docs.documents()) v.push_back(m.encode_document(d.sentences));
  double intra = 0, inter = 0;
  std::size_t ni = 0, ne = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const double c = testing::cosine_of(v[i], v[j]);
      if (category[i] == category[j]) intra += c, ++ni;
      else inter += c, ++ne;
    }
  return {intra / ni, inter / ne};
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  SyntheticCorpusSpec spec;
  spec.docs_per_category = 2;
  spec.sentences_per_doc = 3;
  const auto sc = make_synthetic_corpus(spec, DomainMode::CustomerSupport);
  auto cfg = testing::tiny_config(sc.taxonomy.class_counts(), 16);
  FastDocModel<double> m(cfg);
  Rng rng(4);
  for (auto& p : m.named_parameters())
    if (p.group.rfind("heads.", 0) == 0) testing::fill_normal(p.tensor, rng, 0.3);
  const auto labels = hierarchy_labels(sc.corpus, sc.taxonomy);
  const auto triplets = mine_triplets_metadata(sc.corpus, 2, 1);
  std::map<std::string, Tensor<double>> sent;
  for (const auto& d : sc.corpus.documents()) sent.emplace(d.id, m.embed_sentences(d.sentences));
  auto loss = [&] {
    std::vector<Tensor<double>> a, p, n;
    std::vector<std::vector<Tensor<double>>> logits;
    HierTargets targets;
    for (const auto& t : triplets) {
      for (const auto* id : {&t.anchor_id, &t.positive_id, &t.negative_id}) {
        const auto v = m.encode_sentence_matrix(sent.at(*id));
        logits.push_back(m.classify_hierarchy(v));
        targets.push_back(labels.at(*id).levels);
        (id == &t.anchor_id ? a : id == &t.positive_id ? p : n).push_back(v);
      }
    }
    return total_loss(triplet_loss_batch(stack_rows(a), stack_rows(p), stack_rows(n)),
                      hierarchical_loss(logits, targets));
  };
  const double value = loss().item();
  const auto r = testing::finite_difference_check(loss, testing::trainable(m), 1e-4);
  const double secs = seconds_since(t0);
  return {r.max_rel_error < 1e-4 && secs < 60.0 && value > 0,
          "max relative error " + fmt(r.max_rel_error) + " (analytic " + fmt(r.worst_analytic) + ", numeric " +
              fmt(r.worst_numeric) + ") over " + std::to_string(r.checked) + " parameters, loss " +
              fmt(value) + ", " + fmt(secs) + " s"};
}

Outcome criterion2() {
  Rng rng(2024);
  double worst_t = 0, worst_h = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = 1 + rng.index(16);
    std::vector<double> a(d), p(d), n(d);
    for (std::size_t i = 0; i < d; ++i) a[i] = rng.normal(), p[i] = rng.normal(), n[i] = rng.normal();
    double dp = 0, dn = 0;
    for (std::size_t i = 0; i < d; ++i) dp += (a[i] - p[i]) * (a[i] - p[i]), dn += (a[i] - n[i]) * (a[i] - n[i]);
    const double want = std::max(std::sqrt(dp) - std::sqrt(dn) + 1.0, 0.0);
    const double got =
        triplet_loss(Tensor<double>::vector(a), Tensor<double>::vector(p), Tensor<double>::vector(n)).item();
    worst_t = std::max(worst_t, std::abs(got - want));
  }
  for (int c = 0; c < 100; ++c) {
    const std::size_t docs = 1 + rng.index(4), levels = 1 + rng.index(4);
    std::vector<std::vector<Tensor<double>>> logits(docs);
    HierTargets targets(docs);
    double want = 0;
    for (std::size_t i = 0; i < docs; ++i)
      for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t k = 2 + rng.index(6);
        std::vector<double> z(k);
        double denom = 0;
        for (auto& x : z) x = rng.normal() * 3, denom += std::exp(x);
        const std::size_t y = rng.index(k);
        want += -std::log(std::exp(z[y]) / denom);
        logits[i].push_back(Tensor<double>::vector(z));
        targets[i].push_back(y);
      }
    worst_h = std::max(worst_h, std::abs(hierarchical_loss(logits, targets).item() - want));
  }
  const auto v = Tensor<double>::vector({0.5, -1.0, 2.0});
  const double equal = triplet_loss(v, v, v).item();
  const double uniform = hierarchical_loss<double>({{Tensor<double>::vector({0.0, 0.0})}}, {{1}}).item();
  const bool ok = worst_t < 1e-6 && worst_h < 1e-6 && std::abs(equal - 1.0) < 1e-6 &&
                  std::abs(uniform - std::log(2.0)) < 1e-6;
  return {ok, "triplet max error " + fmt(worst_t) + ", hierarchical max error " + fmt(worst_h) +
                  ", equal-vector loss " + fmt(equal) + ", uniform CE " + fmt(uniform)};
}

struct SeparationRun {
  DeskScale desk;
  FastDocModel<float> model;
  PretrainResult<float> result;
  std::vector<TensorBlob> before;
  std::pair<double, double> cos_before, cos_after;
  double seconds = 0;

  SeparationRun() : model(desk.model_config()) {
    before = snapshot(model);
    cos_before = intra_inter_cosine(model, desk.train, desk.train_category);
    const auto t0 = Clock::now();
    result = pretrain(model, desk.train, desk.triplets, desk.labels, DeskScale::recipe());
    seconds = seconds_since(t0);
    cos_after = intra_inter_cosine(model, desk.train, desk.train_category);
  }

  std::vector<double> held_out_accuracy() const {
    std::vector<double> acc(model.heads().depth(), 0.0);
    for (const auto& d : desk.held_out.documents()) {
      const auto logits = model.classify_hierarchy(model.encode_document(d.sentences));
      const auto& gold = desk.labels.at(d.id).levels;
      for (std::size_t l = 0; l < logits.size(); ++l) acc[l] += detail::argmax(logits[l].data()) == gold[l];
    }
    for (auto& a : acc) a /= static_cast<double>(desk.held_out.size());
    return acc;
  }
};

Outcome criterion3(const SeparationRun& run) {
  const auto after = snapshot(run.model);
  bool bytes_equal = true;
  std::size_t lower_tensors = 0;
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (after[i].group.rfind("lower.", 0) != 0) continue;
    ++lower_tensors;
    bytes_equal = bytes_equal && after[i].values.size() == run.before[i].values.size() &&
                  std::memcmp(after[i].values.data(), run.before[i].values.data(),
                              after[i].values.size() * sizeof(float)) == 0;
  }
  const auto& entry = run.result.drift.back().at("lower.featurizer");
  return {bytes_equal && entry.relative_change == 0.0 && lower_tensors > 0,
          std::to_string(lower_tensors) + " lower tensors byte-identical: " + (bytes_equal ? "yes" : "no") +
              ", drift entry " + fmt(entry.relative_change)};
}

Outcome criterion4() {
  Rng rng(77);
  std::size_t corpora = 0, mined = 0, refusals = 0;
  std::string first_problem;
  const DomainMode modes[] = {DomainMode::CustomerSupport, DomainMode::Scientific, DomainMode::Legal};
  while (corpora < 1000) {
    const DomainMode mode = modes[corpora % 3];
    const Corpus c = testing::random_corpus(rng, mode);
    const std::size_t count = 1 + rng.index(30);
    ++corpora;
    std::vector<Triplet> t;
    try {
      t = mine_triplets_metadata(c, count, corpora);
    } catch (const NoPositiveAvailable&) {
      ++refusals;
      continue;
    } catch (const NoNegativeAvailable&) {
      ++refusals;
      continue;
    }
    ++mined;
    const auto problem = testing::check_metadata_triplets(c, t, count);
    if (!problem.empty() && first_problem.empty()) first_problem = to_string(mode) + ": " + problem;
  }
  return {first_problem.empty() && mined > 900,
          std::to_string(corpora) + " corpora, " + std::to_string(mined) + " mined, " + std::to_string(refusals) +
              " refused as unminable" + (first_problem.empty() ? "" : ", first violation " + first_problem)};
}

Outcome criterion5(const SeparationRun& run) {
  const auto windows = windowed_mean(run.result.curve, 7);
  const double gap = run.cos_after.first - run.cos_after.second;
  const auto acc = run.held_out_accuracy();
  const auto classes = run.desk.sc.taxonomy.class_counts();
  bool acc_ok = true;
  std::string acc_text;
  for (std::size_t l = 0; l < acc.size(); ++l) {
    const double chance = 1.0 / static_cast<double>(classes[l]);
    acc_ok = acc_ok && acc[l] > 1.5 * chance;
    acc_text += " level" + std::to_string(l + 1) + " " + fmt(acc[l]) + " vs chance " + fmt(chance) + ";";
  }
  const bool ok = windows.back() < windows.front() && gap >= 0.1 && acc_ok && run.seconds < 600;
  return {ok, "windowed loss " + fmt(windows.front()) + " -> " + fmt(windows.back()) + ", intra/inter cosine " +
                  fmt(run.cos_after.first) + "/" + fmt(run.cos_after.second) + " (gap " + fmt(gap) + "),  held-out" +
                  acc_text + " " + std::to_string(run.result.steps) + " steps in " + fmt(run.seconds) + " s"};
}

Outcome criterion6() {
  double fastdoc_sum = 0, random_sum = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DeskScale desk(seed);
    auto cfg = desk.model_config();
    cfg.upper_seed = derive_seed(seed, "upper");
    FastDocModel<float> pretrained(cfg);
    const FastDocModel<float> random_init(cfg);
    pretrain(pretrained, desk.train, desk.triplets, desk.labels, DeskScale::recipe());
    const auto train = make_category_tagging_task(desk.sc, 60, derive_seed(seed, "tag.train"));
    const auto dev = make_category_tagging_task(desk.sc, 60, derive_seed(seed, "tag.dev"));
    FinetuneConfig fc;
    fc.seed = seed;
    const double f = finetune_token_classification(pretrained, train, dev, 3, fc).metrics.at("macro_f1");
    const double r = finetune_token_classification(random_init, train, dev, 3, fc).metrics.at("macro_f1");
    fastdoc_sum += f;
    random_sum += r;
    per_seed += " " + fmt(f) + "/" + fmt(r);
  }
  return {fastdoc_sum >= random_sum, "mean dev macro-F1 pretrained " + fmt(fastdoc_sum / 5) + " vs random " +
                                         fmt(random_sum / 5) + "; per seed" + per_seed};
}

Outcome criterion7(const SeparationRun& run) {
  std::vector<Document> docs;
  const auto& all = run.desk.train.documents();
  for (std::size_t i = 0; docs.size() < 20; i += 3) docs.push_back(all[i % all.size()]);
  const auto r = representation_correlation(docs, run.model);
  return {r.defined && r.r > 0 && r.pairs == 190, "r = " + fmt(r.r) + " over " + std::to_string(r.pairs) + " pairs"};
}

Outcome criterion8(const SeparationRun& run) {
  FastDocModel<float> mlm_model(run.desk.model_config());
  const auto mlm = mlm_pretrain(mlm_model, run.desk.train, run.result.steps, DeskScale::recipe());
  const auto& fd = run.result.drift.back();
  const auto& md = mlm.drift.back();
  std::size_t compared = 0, smaller = 0;
  std::string text;
  for (const auto& g : fd.groups) {
    if (g.frozen || g.zero_base) continue;
    const auto& other = md.at(g.group);
    if (other.frozen || other.zero_base) continue;
    ++compared;
    smaller += g.relative_change < other.relative_change;
    text += " " + g.group + " " + fmt(g.relative_change) + "<" + fmt(other.relative_change) + "?";
  }
  return {compared > 0 && 2 * smaller > compared, std::to_string(smaller) + " of " + std::to_string(compared) +
                                                      " groups drift less under the document objective over " +
                                                      std::to_string(run.result.steps) + " steps;" + text};
}

Outcome criterion9() {
  std::vector<std::vector<std::string>> seqs{{}};
  for (std::size_t len = 1; len <= 6; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& s : seqs)
      if (s.size() == len - 1)
        for (const char* tok : {"a", "b", "c"}) {
          auto t = s;
          t.push_back(tok);
          next.push_back(std::move(t));
        }
    seqs.insert(seqs.end(), next.begin(), next.end());
  }
  auto prev = WarningLog::instance().set_sink([](const std::string&) {});
  std::size_t pairs = 0, mismatches = 0;
  for (const auto& a : seqs)
    for (const auto& b : seqs) {
      ++pairs;
      const std::size_t want = testing::brute_force_lcs(a, b);
      const auto s = rouge_l(a, b);
      double f1 = 0;
      if (!a.empty() && !b.empty() && want > 0) {
        const double p = static_cast<double>(want) / b.size(), r = static_cast<double>(want) / a.size();
        f1 = 2 * p * r / (p + r);
      }
      if (lcs_length(a, b) != want || std::abs(s.f1 - f1) > 1e-12) ++mismatches;
    }
  WarningLog::instance().set_sink(prev);
  return {mismatches == 0, std::to_string(seqs.size()) + " sequences, " + std::to_string(pairs) + " pairs, " +
                               std::to_string(mismatches) + " mismatches"};
}

std::vector<std::string> split_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

int run_args(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

Outcome criterion10() {
  testing::TempDir dir("determinism");
  DeskScale desk;
  const std::string corpus = dir.file("corpus.jsonl"), taxonomy = dir.file("taxonomy.txt");
  {
    std::ofstream c(corpus), t(taxonomy);
    write_corpus(c, desk.train);
    desk.sc.taxonomy.write(t);
  }
  const std::string train = dir.file("tag_train.jsonl"), dev = dir.file("tag_dev.jsonl");
  {
    std::ofstream a(train), b(dev);
    write_token_tagging(a, make_category_tagging_task(desk.sc, 30, 1));
    write_token_tagging(b, make_category_tagging_task(desk.sc, 30, 2));
  }
  const std::string triplets = dir.file("triplets.jsonl"), ckpt = dir.file("model.ckpt"),
                    metrics = dir.file("metrics.json"), tuned = dir.file("tuned.ckpt");
  const std::vector<std::vector<std::string>> pipeline{
      {"fastdoc", "mine", "--corpus", corpus, "--count", "200", "--seed", "3", "--out", triplets},
      {"fastdoc", "pretrain", "--corpus", corpus, "--triplets", triplets, "--taxonomy", taxonomy, "--epochs", "2",
       "--seed", "3", "--out", ckpt},
      {"fastdoc", "finetune", "--checkpoint", ckpt, "--task", "token_classification", "--train", train, "--dev", dev,
       "--epochs", "3", "--seed", "3", "--metrics", metrics, "--out", tuned}};
  for (const auto& step : pipeline)
    if (run_args(step) != 0) return {false, "pipeline step '" + step[1] + "' failed"};
  const std::vector<std::string> artefacts{triplets, ckpt, ckpt + ".loss.jsonl", ckpt + ".drift.jsonl", metrics, tuned};
  std::vector<std::string> first;
  for (const auto& f : artefacts) first.push_back(read_file(f));
  for (const auto& manifest : {triplets + ".manifest.json", ckpt + ".manifest.json", metrics + ".manifest.json"}) {
    const auto command = nlohmann::json::parse(read_file(manifest)).at("command").get<std::string>();
    if (run_args(split_command(command)) != 0) return {false, "replay of " + command + " failed"};
  }
  std::size_t identical = 0;
  for (std::size_t i = 0; i < artefacts.size(); ++i) identical += read_file(artefacts[i]) == first[i];
  return {identical == artefacts.size(), std::to_string(identical) + " of " + std::to_string(artefacts.size()) +
                                             " artefacts byte-identical after replaying the manifests"};
}

Outcome criterion11() {
  ModelConfig cfg;
  cfg.level_classes = {3};
  const FastDocModel<float> base(cfg);
  const std::vector<std::string> doc{"Battery drains fast.", "The screen flickers.", "Support replaced it."};
  const std::vector<std::size_t> ids{kClsToken, 17, 99, 4000, kSepToken};
  const auto want_doc = base.encode_document(doc).values();
  const auto want_tok = base.forward_tokens(ids).values();
  auto zero = base.clone();
  zero.apply_lora({0, {"query", "key", "value", "output"}});
  bool exact = zero.encode_document(doc).values() == want_doc && zero.forward_tokens(ids).values() == want_tok;
  std::string counts;
  bool counts_ok = true;
  for (std::size_t rank : {1u, 4u, 8u}) {
    auto fresh = base.clone();
    const std::size_t total = fresh.apply_lora({rank, {"query", "key", "value", "output"}});
    exact = exact && fresh.encode_document(doc).values() == want_doc && fresh.forward_tokens(ids).values() == want_tok;
    const std::size_t matrices = 4 * cfg.num_layers;
    counts_ok = counts_ok && total == matrices * 2 * rank * cfg.d_model;
    for (const auto& g : fresh.param_groups())
      if (g.name.rfind("lora.", 0) == 0) counts_ok = counts_ok && g.numel() == cfg.num_layers * 2 * rank * cfg.d_model;
    counts += " r=" + std::to_string(rank) + ":" + std::to_string(total);
  }
  return {exact && counts_ok, std::string("bit-exact forwards: ") + (exact ? "yes" : "no") +
                                  ", adapter parameters" + counts + " for d_model " + std::to_string(cfg.d_model)};
}

Outcome span_qa_check() {
  const FastDocModel<float> base(ModelConfig{});
  const auto r = finetune_span_qa(base, make_marked_span_task(50, 1), make_marked_span_task(50, 2), {});
  const double em = r.metrics.at("exact_match");
  return {em >= 0.9, "dev exact match " + fmt(em) + " after " + std::to_string(r.epochs_run) + " epochs"};
}

}  // namespace
}  // namespace fastdoc

int main() {
  using namespace fastdoc;
  const auto t0 = Clock::now();
  report(1, "analytic gradients of the total loss match central differences", criterion1);
  report(2, "triplet and hierarchical losses match scalar oracles", criterion2);
  const SeparationRun run;
  report(3, "lower encoder bytes and drift unchanged after pre-training", [&] { return criterion3(run); });
  report(4, "mined triplets pass independent constraint checks on 1000 corpora", criterion4);
  report(5, "desk-scale separation after pre-training", [&] { return criterion5(run); });
  report(6, "pretrained upper encoder >= random init on token classification", criterion6);
  report(7, "sentence and token paths correlate positively over 20 documents", [&] { return criterion7(run); });
  report(8, "document objective drifts less than masked-token objective", [&] { return criterion8(run); });
  report(9, "ROUGE-L matches exhaustive LCS on all short sequences", criterion9);
  report(10, "replayed runs reproduce checkpoints and metrics byte for byte", criterion10);
  report(11, "LoRA rank-0 and fresh adapters are exact no-ops with 2*r*d parameters", criterion11);
  report(12, "supplementary: marked-span QA reaches 90% exact match", span_qa_check);
  std::printf("%d failure(s), %.1f s total\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
