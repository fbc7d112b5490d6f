// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "app.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "medtk/contam.hpp"
#include "medtk/corpus.hpp"
#include "medtk/error.hpp"
#include "medtk/eval.hpp"
#include "medtk/influence.hpp"
#include "medtk/pref.hpp"
#include "medtk/prompts.hpp"
#include "medtk/util.hpp"
#include "medtk/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace medtk::cli {

namespace {

// Records input/output digests and writes the run manifest on success.
// The manifest is the only artifact that carries a wall-clock timestamp.
class Workspace {
 public:
  Workspace(const RunConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)) {
    fs::create_directories(cfg_.output_dir);
  }

  std::string in(const std::string& path) {
    inputs_[path] = "fnv64:" + util::file_digest_hex(path);
    if (cfg_.verbose) std::cerr << "read " << path << "\n";
    return path;
  }

  void out(const std::string& name, std::string_view content) {
    std::string path = (fs::path(cfg_.output_dir) / name).string();
    util::write_file(path, content);
    outputs_[name] = "fnv64:" + util::fnv1a64_hex(content);
    if (cfg_.verbose) std::cerr << "wrote " << path << "\n";
  }

  void finalize() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    json manifest{{"tool", "medtk"},
                  {"version", kVersion},
                  {"command", command_},
                  {"config", json::parse(config_to_json(cfg_))},
                  {"inputs", inputs_},
                  {"outputs", outputs_},
                  {"generated_at", stamp}};
    util::write_file((fs::path(cfg_.output_dir) / "manifest.json").string(),
                     manifest.dump(2) + "\n");
  }

 private:
  RunConfig cfg_;
  std::string command_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

struct CmdArgs {
  std::string input;
  std::string schema_name = "corpus";
  std::string tokenizer = "whitespace";
  bool no_clean = false;
  std::vector<std::string> train_specs;
  std::vector<std::string> bench_specs;
  std::string dataset;
  std::string items_path;
  std::string train_path;
  std::string train_schema;
  bool cot = false;
  std::string results_path;
  std::string labels_a_path;
  std::string labels_b_path;
  std::string triples_path;
  std::string labels_path;
  std::string judge_backend;
  double policy_chosen = 0.0, policy_rejected = 0.0;
  double ref_chosen = 0.0, ref_rejected = 0.0;
  std::string pairs_path;
  int steps = 100;
  double lr = 0.1;
  std::string docs_path;
  std::string query_id;
  std::string train_grads_path;
  std::string test_grad_path;
  std::string stage = "cp";
};

corpus::Tokenizer tokenizer_from_spec(const std::string& spec) {
  if (spec == "whitespace") return corpus::Tokenizer::whitespace();
  if (spec.rfind("vocab:", 0) == 0)
    return corpus::Tokenizer::from_vocab_file(spec.substr(6));
  throw Error(Err::ConfigInvalid, "unknown tokenizer spec: " + spec);
}

json stats_json(const corpus::CorpusStats& s) {
  return json{{"sample_count", s.sample_count},
              {"token_count", s.token_count},
              {"byte_size", s.byte_size}};
}

// name=path pairs for contam inputs
std::pair<std::string, std::string> split_named_path(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
    throw Error(Err::ConfigInvalid, "expected name=path, got: " + spec);
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

// One document per JSONL record ("text", or question/choices/context
// flattened); plain files contribute one document per non-empty line.
std::vector<std::string> load_texts(const std::string& path) {
  std::vector<std::string> texts;
  std::string data = util::read_file(path);
  bool jsonl = path.size() > 6 && path.rfind(".jsonl") == path.size() - 6;
  std::istringstream in(data);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!jsonl) {
      texts.push_back(line);
      continue;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw Error(Err::MalformedRecord,
                  path + " line " + std::to_string(line_no) + ": invalid JSON")
          .with("line", static_cast<long long>(line_no));
    if (j.contains("text") && j["text"].is_string()) {
      texts.push_back(j["text"].get<std::string>());
    } else if (j.contains("question")) {
      std::string t = j["question"].get<std::string>();
      if (j.contains("choices"))
        for (const auto& c : j["choices"]) t += "\n" + c.get<std::string>();
      if (j.contains("context") && j["context"].is_string())
        t += "\n" + j["context"].get<std::string>();
      texts.push_back(std::move(t));
    } else {
      throw Error(Err::MalformedRecord,
                  path + " line " + std::to_string(line_no) +
                      ": record has neither \"text\" nor \"question\"")
          .with("line", static_cast<long long>(line_no));
    }
  }
  return texts;
}

// (id, text) docs for tfidf: "text" or flattened question records
std::vector<std::pair<std::string, std::string>> load_docs(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> docs;
  std::istringstream in(util::read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id"))
      throw Error(Err::MalformedRecord,
                  path + " line " + std::to_string(line_no) + ": need id + text fields")
          .with("line", static_cast<long long>(line_no));
    std::string text;
    if (j.contains("text") && j["text"].is_string()) {
      text = j["text"].get<std::string>();
    } else if (j.contains("question")) {
      text = j["question"].get<std::string>();
      if (j.contains("choices"))
        for (const auto& c : j["choices"]) text += "\n" + c.get<std::string>();
      if (j.contains("context") && j["context"].is_string())
        text += "\n" + j["context"].get<std::string>();
    } else {
      throw Error(Err::MalformedRecord,
                  path + " line " + std::to_string(line_no) +
                      ": record has neither \"text\" nor \"question\"")
          .with("line", static_cast<long long>(line_no));
    }
    docs.emplace_back(j["id"].get<std::string>(), std::move(text));
  }
  return docs;
}

std::vector<influence::GradientRecord> load_gradients(const std::string& path) {
  bool jsonl = path.size() > 6 && path.rfind(".jsonl") == path.size() - 6;
  if (jsonl) return influence::gradients_from_jsonl(util::read_file(path));
  return influence::read_gradient_records(path);
}

std::string resolve_items_path(const RunConfig& cfg, const CmdArgs& a) {
  if (!a.items_path.empty()) return a.items_path;
  auto it = cfg.datasets.find(a.dataset);
  if (it != cfg.datasets.end()) return it->second;
  throw Error(Err::ConfigInvalid,
              "no items file: pass --items or add a \"" + a.dataset +
                  "\" entry to the config datasets map");
}

bool is_usmle(const std::string& dataset) {
  return dataset.rfind("usmle", 0) == 0;
}

std::string resolve_train_path(const RunConfig& cfg, const CmdArgs& a) {
  if (!a.train_path.empty()) return a.train_path;
  auto it = cfg.datasets.find(a.dataset + "-train");
  if (it != cfg.datasets.end()) return it->second;
  if (is_usmle(a.dataset)) {  // no train split of their own
    it = cfg.datasets.find("medqa-train");
    if (it != cfg.datasets.end()) return it->second;
  }
  throw Error(Err::ConfigInvalid,
              "few-shot evaluation needs --train or a \"" + a.dataset +
                  "-train\" datasets entry");
}

std::string resolve_train_schema(const CmdArgs& a) {
  if (!a.train_schema.empty()) return a.train_schema;
  return is_usmle(a.dataset) ? "medqa" : a.dataset;
}

void cmd_ingest(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "ingest");
  corpus::Schema schema = corpus::schema_from_name(a.schema_name);
  corpus::Tokenizer tok = tokenizer_from_spec(a.tokenizer);
  bool clean = schema == corpus::Schema::Corpus && !a.no_clean;
  auto result = corpus::ingest(ws.in(a.input), schema, tok, clean);
  if (schema == corpus::Schema::Corpus)
    ws.out("records.jsonl", corpus::serialize(result.records));
  else
    ws.out("items.jsonl", corpus::serialize(result.items));
  ws.out("stats.json", stats_json(result.stats).dump(2) + "\n");
  ws.finalize();
  std::cout << "ingested " << result.stats.sample_count << " records ("
            << result.stats.token_count << " tokens)\n";
}

void cmd_stats(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "stats");
  corpus::Schema schema = corpus::schema_from_name(a.schema_name);
  corpus::Tokenizer tok = tokenizer_from_spec(a.tokenizer);
  auto result = corpus::ingest(ws.in(a.input), schema, tok, false);
  ws.out("stats.json", stats_json(result.stats).dump(2) + "\n");

  std::string md = "| Source | Samples | Tokens | Bytes |\n|---|---|---|---|\n";
  if (schema == corpus::Schema::Corpus) {
    std::map<std::string, corpus::CorpusStats> by_source;
    for (const auto& r : result.records) {
      auto& s = by_source[r.source];
      s.sample_count += 1;
      s.token_count += r.token_count;
      s.byte_size += static_cast<std::int64_t>(r.text.size());
    }
    for (const auto& [source, s] : by_source)
      md += "| " + source + " | " + std::to_string(s.sample_count) + " | " +
            std::to_string(s.token_count) + " | " + std::to_string(s.byte_size) +
            " |\n";
  }
  md += "| total | " + std::to_string(result.stats.sample_count) + " | " +
        std::to_string(result.stats.token_count) + " | " +
        std::to_string(result.stats.byte_size) + " |\n";
  ws.out("stats.md", md);
  ws.finalize();
  std::cout << md;
}

void cmd_contam(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "contam");
  if (a.train_specs.empty() || a.bench_specs.empty())
    throw Error(Err::ConfigInvalid, "contam needs at least one --train and one --bench");
  for (int n : cfg.ngram_orders)
    if (n < 1) throw Error(Err::InvalidNgramOrder, "ngram order must be >= 1");
  std::vector<contam::NamedCorpus> trains, benches;
  for (const auto& spec : a.train_specs) {
    auto [name, path] = split_named_path(spec);
    trains.push_back({name, load_texts(ws.in(path))});
  }
  for (const auto& spec : a.bench_specs) {
    auto [name, path] = split_named_path(spec);
    benches.push_back({name, load_texts(ws.in(path))});
  }
  std::string csv = contam::overlap_matrix_csv(
      trains, benches, cfg.ngram_orders,
      static_cast<unsigned>(cfg.max_concurrency));
  ws.out("contamination.csv", csv);
  ws.finalize();
  std::cout << csv;
}

void cmd_prompts(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "prompts");
  prompts::Dataset ds = prompts::dataset_from_name(a.dataset);
  auto tmpl = prompts::PromptTemplate::for_dataset(ds);
  auto items =
      corpus::ingest(ws.in(resolve_items_path(cfg, a)), prompts::dataset_schema(ds))
          .items;
  std::vector<corpus::QaItem> exemplars;
  prompts::PromptTemplate etmpl = tmpl;
  if (cfg.shots > 0) {
    prompts::Dataset tds = prompts::dataset_from_name(resolve_train_schema(a));
    etmpl = prompts::PromptTemplate::for_dataset(tds);
    auto pool = corpus::ingest(ws.in(resolve_train_path(cfg, a)),
                               prompts::dataset_schema(tds))
                    .items;
    exemplars = prompts::select_exemplars(
        pool, static_cast<std::size_t>(cfg.shots), cfg.seed);
  }
  std::string out;
  for (const auto& item : items) {
    prompts::RenderedPrompt rp =
        exemplars.empty() ? prompts::render_mcqa(item, tmpl)
                          : prompts::assemble_fewshot(item, exemplars, tmpl, &etmpl);
    if (a.cot) rp = prompts::apply_cot(rp);
    json j{{"item_id", rp.item_id},
           {"prompt", rp.prompt_text},
           {"candidates", rp.candidates}};
    if (rp.gold_index) j["gold_index"] = *rp.gold_index;
    out += j.dump();
    out += '\n';
  }
  ws.out("prompts.jsonl", out);
  ws.finalize();
  std::cout << "rendered " << items.size() << " prompts\n";
}

void cmd_eval(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "eval");
  prompts::Dataset ds = prompts::dataset_from_name(a.dataset);
  auto tmpl = prompts::PromptTemplate::for_dataset(ds);
  auto items =
      corpus::ingest(ws.in(resolve_items_path(cfg, a)), prompts::dataset_schema(ds))
          .items;

  eval::BackendSpec spec = eval::BackendSpec::parse(cfg.backend, cfg.seed);
  spec.timeout = std::chrono::milliseconds(cfg.timeout_ms);
  spec.max_concurrency = cfg.max_concurrency;
  if (spec.kind == eval::BackendSpec::Kind::MockTable) ws.in(spec.fixture_path);
  auto backend = eval::make_backend(spec);

  eval::EvalOptions opts;
  opts.shots = cfg.shots;
  opts.seed = cfg.seed;
  opts.max_concurrency = cfg.max_concurrency;
  opts.partial_failures = cfg.partial_failures;
  opts.length_normalize = cfg.length_normalize;
  opts.cot = a.cot;
  std::vector<corpus::QaItem> pool;
  prompts::PromptTemplate etmpl = tmpl;
  if (cfg.shots > 0) {
    prompts::Dataset tds = prompts::dataset_from_name(resolve_train_schema(a));
    etmpl = prompts::PromptTemplate::for_dataset(tds);
    pool = corpus::ingest(ws.in(resolve_train_path(cfg, a)),
                          prompts::dataset_schema(tds))
               .items;
    opts.exemplar_pool = &pool;
    opts.exemplar_template = &etmpl;
  }

  eval::EvalReport report = eval::evaluate_dataset(*backend, items, tmpl, opts);
  ws.out("report.csv", eval::report_to_csv(report));
  ws.out("report.md", eval::report_to_markdown(report));
  ws.finalize();
  std::cout << report.dataset << " shots=" << report.shots
            << " accuracy=" << util::fmt_fixed(report.accuracy, 4) << " ("
            << report.n_items << " items, " << report.failures.size()
            << " failures)\n";
}

void cmd_uncertainty(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "uncertainty");
  auto results = eval::results_from_csv(util::read_file(ws.in(a.results_path)));
  eval::UncertaintyReport rep = eval::uncertainty_report(results);
  ws.out("uncertainty.csv", eval::uncertainty_to_csv(rep));
  ws.out("uncertainty.md", eval::uncertainty_to_markdown(rep));
  ws.finalize();
  std::cout << eval::uncertainty_to_markdown(rep);
}

void cmd_prefs(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "prefs");
  auto triples = pref::triples_from_jsonl(util::read_file(ws.in(a.triples_path)));
  std::vector<pref::PreferencePair> pairs;
  if (!a.judge_backend.empty()) {
    eval::BackendSpec spec = eval::BackendSpec::parse(a.judge_backend, cfg.seed);
    spec.timeout = std::chrono::milliseconds(cfg.timeout_ms);
    auto backend = eval::make_backend(spec);
    for (const auto& t : triples) {
      std::string verdict = backend->generate(
          pref::build_judge_prompt(t.question, t.answer1, t.answer2));
      pairs.push_back(pref::make_preference_pair(t, pref::parse_judge_choice(verdict)));
    }
  } else if (!a.labels_path.empty()) {
    std::map<std::string, std::pair<int, std::map<std::string, int>>> labels;
    std::istringstream in(util::read_file(ws.in(a.labels_path)));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("id") || !j.contains("judge_label"))
        throw Error(Err::MalformedRecord,
                    "labels line " + std::to_string(line_no) +
                        ": expected {id, judge_label}")
            .with("line", static_cast<long long>(line_no));
      std::map<std::string, int> humans;
      if (j.contains("human_labels"))
        for (auto& [k, v] : j["human_labels"].items()) humans[k] = v.get<int>();
      labels[j["id"].get<std::string>()] = {j["judge_label"].get<int>(), humans};
    }
    for (const auto& t : triples) {
      auto it = labels.find(t.id);
      if (it == labels.end())
        throw Error(Err::MalformedRecord, "no judge label for triple " + t.id);
      pairs.push_back(
          pref::make_preference_pair(t, it->second.first, it->second.second));
    }
  } else {
    throw Error(Err::ConfigInvalid, "prefs needs --judge-backend or --labels");
  }
  ws.out("pairs.jsonl", pref::pairs_to_jsonl(pairs));
  ws.finalize();
  std::cout << "built " << pairs.size() << " preference pairs\n";
}

std::vector<int> read_label_file(const std::string& path) {
  std::vector<int> labels;
  std::istringstream in(util::read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line != "1" && line != "2")
      throw Error(Err::MalformedRecord,
                  path + " line " + std::to_string(line_no) + ": labels are 1 or 2")
          .with("line", static_cast<long long>(line_no));
    labels.push_back(line == "1" ? 1 : 2);
  }
  return labels;
}

void cmd_agreement(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "agreement");
  auto la = read_label_file(ws.in(a.labels_a_path));
  auto lb = read_label_file(ws.in(a.labels_b_path));
  pref::AgreementReport rep = pref::agreement(la, lb);
  std::string table = pref::agreement_table(rep);
  ws.out("agreement.md", table);
  json j{{"kappa", rep.kappa},
         {"observed_agreement", rep.observed_agreement},
         {"expected_agreement", rep.expected_agreement},
         {"accuracy", rep.accuracy},
         {"n", rep.n}};
  ws.out("agreement.json", j.dump(2) + "\n");
  ws.finalize();
  std::cout << table;
}

void cmd_dpo_loss(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "dpo-loss");
  pref::DpoParams p;
  p.beta = cfg.beta;
  p.policy_chosen = a.policy_chosen;
  p.policy_rejected = a.policy_rejected;
  p.ref_chosen = a.ref_chosen;
  p.ref_rejected = a.ref_rejected;
  pref::DpoGrad g = pref::dpo_grad(p);
  json j{{"beta", p.beta},
         {"delta", pref::dpo_delta(p)},
         {"loss", pref::dpo_loss(p)},
         {"grad_policy_chosen", g.d_policy_chosen},
         {"grad_policy_rejected", g.d_policy_rejected}};
  ws.out("dpo_loss.json", j.dump(2) + "\n");
  ws.finalize();
  std::cout << j.dump() << "\n";
}

void cmd_dpo_fit(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "dpo-fit");
  auto pairs = pref::pairs_from_jsonl(util::read_file(ws.in(a.pairs_path)));
  pref::FitResult fit = pref::fit_toy_policy(pairs, a.steps, a.lr, cfg.beta);

  json policy = json::object();
  for (const auto& t : fit.policy.tables) {
    json tbl = json::object();
    for (std::size_t i = 0; i < t.responses.size(); ++i)
      tbl[t.responses[i]] = t.logits[i];
    policy[t.prompt] = tbl;
  }
  ws.out("policy.json", policy.dump(2) + "\n");

  std::string losses = "step,total_loss\n";
  for (std::size_t s = 0; s < fit.loss_history.size(); ++s)
    losses += std::to_string(s) + ',' + util::fmt_sig(fit.loss_history[s], 12) + '\n';
  ws.out("loss_history.csv", losses);

  std::string margins = "pair_id,initial_margin,final_margin\n";
  for (std::size_t i = 0; i < pairs.size(); ++i)
    margins += pairs[i].id + ',' + util::fmt_sig(fit.initial_margins[i], 12) + ',' +
               util::fmt_sig(fit.final_margins[i], 12) + '\n';
  ws.out("margins.csv", margins);
  ws.finalize();
  std::cout << "fit " << pairs.size() << " pairs over " << a.steps
            << " steps; final loss "
            << util::fmt_sig(fit.loss_history.back(), 6) << "\n";
}

void cmd_influence(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "influence");
  bool tfidf_mode = !a.docs_path.empty();
  bool grad_mode = !a.train_grads_path.empty();
  if (tfidf_mode == grad_mode)
    throw Error(Err::ConfigInvalid,
                "influence needs exactly one of --docs/--query-id or "
                "--train-grads/--test-grad");
  if (tfidf_mode) {
    if (a.query_id.empty())
      throw Error(Err::ConfigInvalid, "tf-idf mode needs --query-id");
    auto docs = load_docs(ws.in(a.docs_path));
    auto model = influence::TfidfModel::fit(docs);
    const influence::TfidfVector* query = nullptr;
    std::vector<influence::TfidfVector> candidates;
    for (const auto& v : model.vectors()) {
      if (v.doc_id == a.query_id)
        query = &v;
      else
        candidates.push_back(v);
    }
    if (!query)
      throw Error(Err::ConfigInvalid, "query id not found in docs: " + a.query_id);
    if (candidates.empty())
      throw Error(Err::EmptyCorpus, "no candidate documents besides the query");
    auto top = influence::cosine_topk(*query, candidates,
                                      static_cast<std::size_t>(cfg.k));
    std::string csv = "train_id,similarity,rank\n";
    for (std::size_t i = 0; i < top.size(); ++i)
      csv += top[i].first + ',' + util::fmt_sig(top[i].second, 12) + ',' +
             std::to_string(i + 1) + '\n';
    ws.out("topk.csv", csv);
    ws.finalize();
    std::cout << "ranked " << top.size() << " documents\n";
    return;
  }
  if (a.test_grad_path.empty())
    throw Error(Err::ConfigInvalid, "gradient mode needs --test-grad");
  auto train = load_gradients(ws.in(a.train_grads_path));
  auto test = load_gradients(ws.in(a.test_grad_path));
  if (test.size() != 1)
    throw Error(Err::MalformedGradientFile,
                "test gradient file must hold exactly one record, has " +
                    std::to_string(test.size()));
  std::vector<double> lambdas;
  if (cfg.lambda > 0.0 && !train.empty())
    lambdas.assign(train[0].layer_grads.size(), cfg.lambda);
  auto scores = influence::influence_scores(train, test[0], lambdas);
  ws.out("influence.csv", influence::scores_to_csv(scores));
  ws.finalize();
  std::cout << "scored " << scores.size() << " training examples\n";
}

void cmd_recipe(const RunConfig& cfg, const CmdArgs& a) {
  Workspace ws(cfg, "recipe");
  corpus::Stage stage = corpus::stage_from_name(a.stage);
  std::string conf = corpus::serialize_recipe(corpus::recipe_for(stage));
  ws.out("recipe_" + a.stage + ".conf", conf);
  ws.finalize();
  std::cout << conf;
}

void build_app(CLI::App& app, RunConfig& cfg, CmdArgs& args,
               std::string& command) {
  app.require_subcommand(1);
  app.add_option("--config", "JSON run configuration (flags override it)")
      ->type_name("PATH");
  app.add_option("--seed", cfg.seed, "seed for every random choice in the run");
  app.add_option("--output-dir", cfg.output_dir, "directory for outputs + manifest");
  app.add_flag("--verbose", cfg.verbose, "chatty progress on stderr");

  auto remember = [&command](const char* name) {
    return [&command, name]() { command = name; };
  };

  CLI::App* ingest = app.add_subcommand("ingest", "parse + validate a JSONL dataset");
  ingest->add_option("--input", args.input, "JSONL input file")->required();
  ingest->add_option("--schema", args.schema_name,
                     "corpus|medmcqa|medqa|pubmedqa|usmle1|usmle2|usmle3");
  ingest->add_option("--tokenizer", args.tokenizer, "whitespace or vocab:PATH");
  ingest->add_flag("--no-clean", args.no_clean, "skip URL/whitespace cleanup");
  ingest->callback(remember("ingest"));

  CLI::App* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("--input", args.input, "JSONL input file")->required();
  stats->add_option("--schema", args.schema_name, "record schema");
  stats->add_option("--tokenizer", args.tokenizer, "whitespace or vocab:PATH");
  stats->callback(remember("stats"));

  CLI::App* contam = app.add_subcommand("contam", "n-gram overlap matrix");
  contam->add_option("--train", args.train_specs, "name=path training corpus")
      ->required();
  contam->add_option("--bench", args.bench_specs, "name=path benchmark")->required();
  contam->add_option("--n", cfg.ngram_orders, "n-gram orders (default 3 5)");
  contam->add_option("--concurrency", cfg.max_concurrency, "index build threads");
  contam->callback(remember("contam"));

  CLI::App* prompts_cmd = app.add_subcommand("prompts", "render prompt files");
  prompts_cmd->add_option("--dataset", args.dataset, "benchmark name")->required();
  prompts_cmd->add_option("--items", args.items_path, "items JSONL (overrides config)");
  prompts_cmd->add_option("--shots", cfg.shots, "number of exemplars");
  prompts_cmd->add_option("--train", args.train_path, "exemplar pool JSONL");
  prompts_cmd->add_option("--train-schema", args.train_schema,
                          "schema of the exemplar pool");
  prompts_cmd->add_flag("--cot", args.cot, "prepend the step-by-step instruction");
  prompts_cmd->callback(remember("prompts"));

  CLI::App* eval_cmd = app.add_subcommand("eval", "log-likelihood evaluation");
  eval_cmd->add_option("--dataset", args.dataset, "benchmark name")->required();
  eval_cmd->add_option("--items", args.items_path, "items JSONL (overrides config)");
  eval_cmd->add_option("--backend", cfg.backend,
                       "mock-hash | mock-table:PATH | http://host:port");
  eval_cmd->add_option("--shots", cfg.shots, "number of exemplars");
  eval_cmd->add_option("--train", args.train_path, "exemplar pool JSONL");
  eval_cmd->add_option("--train-schema", args.train_schema,
                       "schema of the exemplar pool");
  eval_cmd->add_flag("--cot", args.cot, "prepend the step-by-step instruction");
  eval_cmd->add_option("--concurrency", cfg.max_concurrency, "parallel backend calls");
  eval_cmd->add_option("--timeout-ms", cfg.timeout_ms, "backend timeout");
  eval_cmd->add_flag("--length-normalize", cfg.length_normalize,
                     "divide scores by continuation byte length");
  eval_cmd->add_flag("--partial-failures", cfg.partial_failures,
                     "record per-item failures instead of aborting");
  eval_cmd->callback(remember("eval"));

  CLI::App* unc = app.add_subcommand("uncertainty", "confidence histogram report");
  unc->add_option("--results", args.results_path, "eval report.csv")->required();
  unc->callback(remember("uncertainty"));

  CLI::App* prefs = app.add_subcommand("prefs", "build preference pairs");
  prefs->add_option("--triples", args.triples_path, "dialogue triples JSONL")
      ->required();
  prefs->add_option("--judge-backend", args.judge_backend,
                    "http backend for judge verdicts");
  prefs->add_option("--labels", args.labels_path, "precomputed judge labels JSONL");
  prefs->add_option("--timeout-ms", cfg.timeout_ms, "judge backend timeout");
  prefs->callback(remember("prefs"));

  CLI::App* agree = app.add_subcommand("agreement", "inter-annotator statistics");
  agree->add_option("--labels-a", args.labels_a_path, "first label file (1|2 per line)")
      ->required();
  agree->add_option("--labels-b", args.labels_b_path, "second label file")->required();
  agree->callback(remember("agreement"));

  CLI::App* dpo_loss = app.add_subcommand("dpo-loss", "preference loss + gradients");
  dpo_loss->add_option("--beta", cfg.beta, "preference temperature");
  dpo_loss->add_option("--policy-chosen", args.policy_chosen,
                       "log pi_theta(chosen)")->required();
  dpo_loss->add_option("--policy-rejected", args.policy_rejected,
                       "log pi_theta(rejected)")->required();
  dpo_loss->add_option("--ref-chosen", args.ref_chosen, "log pi_ref(chosen)");
  dpo_loss->add_option("--ref-rejected", args.ref_rejected, "log pi_ref(rejected)");
  dpo_loss->callback(remember("dpo-loss"));

  CLI::App* dpo_fit = app.add_subcommand("dpo-fit", "train the tabular toy policy");
  dpo_fit->add_option("--pairs", args.pairs_path, "preference pairs JSONL")->required();
  dpo_fit->add_option("--steps", args.steps, "gradient steps");
  dpo_fit->add_option("--lr", args.lr, "learning rate");
  dpo_fit->add_option("--beta", cfg.beta, "preference temperature");
  dpo_fit->callback(remember("dpo-fit"));

  CLI::App* infl = app.add_subcommand("influence", "tf-idf top-k / influence scores");
  infl->add_option("--docs", args.docs_path, "documents JSONL for tf-idf mode");
  infl->add_option("--query-id", args.query_id, "test document id");
  infl->add_option("--k", cfg.k, "top-k size");
  infl->add_option("--train-grads", args.train_grads_path,
                   "training gradient records (.bin or .jsonl)");
  infl->add_option("--test-grad", args.test_grad_path, "test gradient record");
  infl->add_option("--lambda", cfg.lambda, "damping (0 = per-layer default)");
  infl->callback(remember("influence"));

  CLI::App* recipe = app.add_subcommand("recipe", "emit a training recipe config");
  recipe->add_option("--stage", args.stage, "cp|sft|dpo")->required();
  recipe->callback(remember("recipe"));

  // global flags remain usable after the subcommand name
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();
}

void print_error_record(const Error& e) {
  json rec{{"error", e.code_name()}, {"message", e.what()}};
  if (!e.context().empty()) rec["context"] = e.context();
  std::cerr << rec.dump() << "\n";
}

}  // namespace

std::string help_text(const std::string& subcommand) {
  CLI::App app{"medical-LLM evaluation and data-pipeline toolkit"};
  RunConfig cfg;
  CmdArgs args;
  std::string command;
  build_app(app, cfg, args, command);
  if (subcommand.empty()) return app.help();
  CLI::App* sub = app.get_subcommand(subcommand);
  return sub->help();
}

int run(const std::vector<std::string>& args_in) {
  RunConfig cfg;
  // the config file seeds the defaults, then flags override what they name
  for (std::size_t i = 0; i < args_in.size(); ++i) {
    std::string config_path;
    if (args_in[i] == "--config" && i + 1 < args_in.size())
      config_path = args_in[i + 1];
    else if (args_in[i].rfind("--config=", 0) == 0)
      config_path = args_in[i].substr(9);
    if (config_path.empty()) continue;
    try {
      cfg = load_config(config_path);
    } catch (const Error& e) {
      print_error_record(e);
      return 2;
    }
    break;
  }

  CLI::App app{"medical-LLM evaluation and data-pipeline toolkit"};
  app.set_version_flag("--version", kVersion);
  CmdArgs args;
  std::string command;
  build_app(app, cfg, args, command);

  std::vector<std::string> reversed(args_in.rbegin(), args_in.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (command == "ingest") cmd_ingest(cfg, args);
    else if (command == "stats") cmd_stats(cfg, args);
    else if (command == "contam") cmd_contam(cfg, args);
    else if (command == "prompts") cmd_prompts(cfg, args);
    else if (command == "eval") cmd_eval(cfg, args);
    else if (command == "uncertainty") cmd_uncertainty(cfg, args);
    else if (command == "prefs") cmd_prefs(cfg, args);
    else if (command == "agreement") cmd_agreement(cfg, args);
    else if (command == "dpo-loss") cmd_dpo_loss(cfg, args);
    else if (command == "dpo-fit") cmd_dpo_fit(cfg, args);
    else if (command == "influence") cmd_influence(cfg, args);
    else if (command == "recipe") cmd_recipe(cfg, args);
    else {
      print_error_record(Error(Err::UnknownSubcommand, "no subcommand given"));
      return 2;
    }
  } catch (const Error& e) {
    print_error_record(e);
    return e.code() == Err::ConfigInvalid || e.code() == Err::UnknownSubcommand ? 2 : 1;
  } catch (const std::exception& e) {
    json rec{{"error", "Internal"}, {"message", e.what()}};
    std::cerr << rec.dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace medtk::cli
