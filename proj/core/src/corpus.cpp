// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "medtk/error.hpp"
#include "medtk/util.hpp"

using nlohmann::json;

namespace medtk::corpus {

CorpusStats merge(const CorpusStats& a, const CorpusStats& b) {
  return {a.sample_count + b.sample_count, a.token_count + b.token_count,
          a.byte_size + b.byte_size};
}

Schema schema_from_name(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (n == "corpus") return Schema::Corpus;
  if (n == "medmcqa") return Schema::QaMedMcqa;
  if (n == "medqa") return Schema::QaMedQa;
  if (n == "pubmedqa") return Schema::QaPubMedQa;
  if (n == "usmle1" || n == "usmle-1" || n == "usmle_step1") return Schema::QaUsmle1;
  if (n == "usmle2" || n == "usmle-2" || n == "usmle_step2") return Schema::QaUsmle2;
  if (n == "usmle3" || n == "usmle-3" || n == "usmle_step3") return Schema::QaUsmle3;
  throw Error(Err::UnknownSchema, "unknown schema: " + name);
}

const char* schema_name(Schema s) {
  switch (s) {
    case Schema::Corpus: return "corpus";
    case Schema::QaMedMcqa: return "medmcqa";
    case Schema::QaMedQa: return "medqa";
    case Schema::QaPubMedQa: return "pubmedqa";
    case Schema::QaUsmle1: return "usmle1";
    case Schema::QaUsmle2: return "usmle2";
    case Schema::QaUsmle3: return "usmle3";
  }
  return "?";
}

bool schema_is_qa(Schema s) { return s != Schema::Corpus; }

int schema_choice_count(Schema s) {
  switch (s) {
    case Schema::QaMedMcqa: return 4;
    case Schema::QaMedQa: return 5;
    case Schema::QaPubMedQa: return 3;
    case Schema::QaUsmle1: return 5;
    case Schema::QaUsmle2: return 6;
    case Schema::QaUsmle3: return 5;
    case Schema::Corpus: break;
  }
  throw Error(Err::UnknownSchema, "schema has no choice count");
}

bool schema_has_context(Schema s) { return s == Schema::QaPubMedQa; }

Tokenizer Tokenizer::from_vocab_file(const std::string& path) {
  Tokenizer t;
  t.kind = Kind::Vocab;
  std::istringstream in(util::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) t.vocab.push_back(line);
  }
  // longest-first so greedy matching sees longer pieces before their prefixes
  std::sort(t.vocab.begin(), t.vocab.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  return t;
}

namespace {

bool is_url_token(std::string_view tok) {
  auto lower_eq = [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == b;
  };
  if (tok.size() >= 4) {
    bool www = true;
    const char* p = "www.";
    for (int i = 0; i < 4; ++i) www = www && lower_eq(tok[i], p[i]);
    if (www) return true;
  }
  // scheme://  with scheme = alpha (alnum | + | - | .)*
  if (tok.empty() || !std::isalpha(static_cast<unsigned char>(tok[0]))) return false;
  std::size_t i = 1;
  while (i < tok.size() &&
         (std::isalnum(static_cast<unsigned char>(tok[i])) || tok[i] == '+' ||
          tok[i] == '-' || tok[i] == '.'))
    ++i;
  return i + 2 < tok.size() && tok[i] == ':' && tok[i + 1] == '/' && tok[i + 2] == '/';
}

}  // namespace

std::string clean_text(const std::string& raw) {
  // pass 1: drop URL tokens (maximal non-whitespace runs)
  std::string kept;
  kept.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (std::isspace(static_cast<unsigned char>(raw[i]))) {
      kept.push_back(raw[i]);
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::string_view tok(raw.data() + start, i - start);
    if (!is_url_token(tok)) kept.append(tok);
  }

  // pass 2: canonical whitespace. A run with any newline becomes "\n",
  // otherwise a single space; ends trimmed.
  std::string out;
  out.reserve(kept.size());
  i = 0;
  while (i < kept.size()) {
    if (!std::isspace(static_cast<unsigned char>(kept[i]))) {
      out.push_back(kept[i]);
      ++i;
      continue;
    }
    bool has_newline = false;
    while (i < kept.size() && std::isspace(static_cast<unsigned char>(kept[i]))) {
      has_newline = has_newline || kept[i] == '\n';
      ++i;
    }
    if (!out.empty() && i < kept.size()) out.push_back(has_newline ? '\n' : ' ');
  }
  return out;
}

std::int64_t count_tokens(const std::string& text, const Tokenizer& tok) {
  if (tok.kind == Tokenizer::Kind::Whitespace) {
    std::int64_t n = 0;
    bool in_tok = false;
    for (unsigned char c : text) {
      bool ws = std::isspace(c) != 0;
      if (!ws && !in_tok) ++n;
      in_tok = !ws;
    }
    return n;
  }
  std::int64_t n = 0;
  for (const std::string& word : util::split_ws(text)) {
    std::size_t pos = 0;
    while (pos < word.size()) {
      std::size_t matched = 0;
      for (const std::string& piece : tok.vocab) {
        if (piece.size() <= word.size() - pos &&
            word.compare(pos, piece.size(), piece) == 0) {
          matched = piece.size();
          break;
        }
      }
      if (matched == 0) matched = 1;  // unknown byte
      pos += matched;
      ++n;
    }
  }
  return n;
}

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  throw Error(Err::MalformedRecord,
              "line " + std::to_string(line_no) + ": " + why)
      .with("line", static_cast<long long>(line_no));
}

std::string require_string(const json& j, const char* field, std::size_t line_no) {
  if (!j.contains(field) || !j[field].is_string())
    malformed(line_no, std::string("missing or non-string field \"") + field + "\"");
  return j[field].get<std::string>();
}

CorpusRecord parse_corpus_record(const json& j, std::size_t line_no) {
  CorpusRecord r;
  r.id = require_string(j, "id", line_no);
  if (r.id.empty()) malformed(line_no, "empty id");
  r.text = require_string(j, "text", line_no);
  r.source = require_string(j, "source", line_no);
  r.license = require_string(j, "license", line_no);
  return r;
}

QaItem parse_qa_item(const json& j, Schema schema, std::size_t line_no) {
  QaItem q;
  q.id = require_string(j, "id", line_no);
  if (q.id.empty()) malformed(line_no, "empty id");
  q.question = require_string(j, "question", line_no);
  if (!j.contains("choices") || !j["choices"].is_array())
    malformed(line_no, "missing or non-array field \"choices\"");
  for (const auto& c : j["choices"]) {
    if (!c.is_string()) malformed(line_no, "non-string choice");
    q.choices.push_back(c.get<std::string>());
  }
  if (q.choices.size() < 2) malformed(line_no, "fewer than 2 choices");
  int expected = schema_choice_count(schema);
  if (static_cast<int>(q.choices.size()) != expected)
    malformed(line_no, "expected " + std::to_string(expected) + " choices, got " +
                           std::to_string(q.choices.size()));
  if (!j.contains("answer_index") || !j["answer_index"].is_number_integer())
    malformed(line_no, "missing or non-integer field \"answer_index\"");
  int ai = j["answer_index"].get<int>();
  if (ai < 0 || ai >= static_cast<int>(q.choices.size()))
    malformed(line_no, "answer_index " + std::to_string(ai) + " out of range");
  q.answer_index = ai;
  if (j.contains("context")) {
    if (!j["context"].is_string()) malformed(line_no, "non-string context");
    q.context = j["context"].get<std::string>();
  }
  if (schema_has_context(schema) && !q.context)
    malformed(line_no, "schema requires a context field");
  if (!schema_has_context(schema) && q.context)
    malformed(line_no, "schema does not allow a context field");
  return q;
}

std::int64_t qa_bytes(const QaItem& q) {
  std::int64_t b = static_cast<std::int64_t>(q.question.size());
  for (const auto& c : q.choices) b += static_cast<std::int64_t>(c.size());
  if (q.context) b += static_cast<std::int64_t>(q.context->size());
  return b;
}

std::int64_t qa_tokens(const QaItem& q, const Tokenizer& tok) {
  std::int64_t t = count_tokens(q.question, tok);
  for (const auto& c : q.choices) t += count_tokens(c, tok);
  if (q.context) t += count_tokens(*q.context, tok);
  return t;
}

}  // namespace

IngestResult ingest_lines(const std::vector<std::string>& lines, Schema schema,
                          const Tokenizer& tok, bool clean) {
  IngestResult out;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 0;
  for (const std::string& raw_line : lines) {
    ++line_no;
    std::string line = raw_line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) malformed(line_no, "invalid JSON object");
    if (schema == Schema::Corpus) {
      CorpusRecord r = parse_corpus_record(j, line_no);
      if (clean) r.text = clean_text(r.text);
      r.token_count = count_tokens(r.text, tok);
      if (!seen_ids.insert(r.id).second) malformed(line_no, "duplicate id: " + r.id);
      out.stats.sample_count += 1;
      out.stats.token_count += r.token_count;
      out.stats.byte_size += static_cast<std::int64_t>(r.text.size());
      out.records.push_back(std::move(r));
    } else {
      QaItem q = parse_qa_item(j, schema, line_no);
      if (!seen_ids.insert(q.id).second) malformed(line_no, "duplicate id: " + q.id);
      out.stats.sample_count += 1;
      out.stats.token_count += qa_tokens(q, tok);
      out.stats.byte_size += qa_bytes(q);
      out.items.push_back(std::move(q));
    }
  }
  return out;
}

IngestResult ingest(const std::string& path, Schema schema, const Tokenizer& tok,
                    bool clean) {
  std::istringstream in(util::read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return ingest_lines(lines, schema, tok, clean);
}

std::string serialize(const std::vector<CorpusRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j{{"id", r.id}, {"text", r.text}, {"source", r.source},
           {"license", r.license}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string serialize(const std::vector<QaItem>& items) {
  std::string out;
  for (const auto& q : items) {
    json j{{"id", q.id}, {"question", q.question}, {"choices", q.choices}};
    if (q.answer_index) j["answer_index"] = *q.answer_index;
    if (q.context) j["context"] = *q.context;
    out += j.dump();
    out += '\n';
  }
  return out;
}

CorpusStats stats_of(const std::vector<CorpusRecord>& records, const Tokenizer& tok) {
  CorpusStats s;
  for (const auto& r : records) {
    s.sample_count += 1;
    s.token_count += count_tokens(r.text, tok);
    s.byte_size += static_cast<std::int64_t>(r.text.size());
  }
  return s;
}

CorpusStats stats_of(const std::vector<QaItem>& items, const Tokenizer& tok) {
  CorpusStats s;
  for (const auto& q : items) {
    s.sample_count += 1;
    s.token_count += qa_tokens(q, tok);
    s.byte_size += qa_bytes(q);
  }
  return s;
}

Stage stage_from_name(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (n == "cp") return Stage::CP;
  if (n == "sft") return Stage::SFT;
  if (n == "dpo") return Stage::DPO;
  throw Error(Err::ConfigInvalid, "unknown stage: " + name);
}

RecipeConfig recipe_for(Stage stage) {
  RecipeConfig c;
  c.stage = stage;
  c.learning_rate = "1e-4";
  c.scheduler = "cosine";
  c.per_device_batch = 8;
  c.grad_accum = 2;
  switch (stage) {
    case Stage::CP:
      c.lora_rank = 8;
      c.lora_alpha = 16;
      c.epochs = 1;
      c.loss_on_responses_only = false;
      break;
    case Stage::SFT:
      c.lora_rank = 32;
      c.lora_alpha = 32;
      c.epochs = 3;
      c.loss_on_responses_only = true;
      c.artifact_defaults = {"scheduler"};
      break;
    case Stage::DPO:
      // the source recipe leaves this stage's optimizer settings open;
      // everything here is an artifact default and flagged as such
      c.lora_rank = 32;
      c.lora_alpha = 32;
      c.epochs = 1;
      c.loss_on_responses_only = false;
      c.beta = 0.1;
      c.beta_is_default = true;
      c.artifact_defaults = {"lora_rank",        "lora_alpha", "learning_rate",
                             "scheduler",        "per_device_batch",
                             "grad_accum",       "epochs",
                             "loss_on_responses_only", "beta"};
      break;
  }
  return c;
}

std::string serialize_recipe(const RecipeConfig& c) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  };
  const char* stage = c.stage == Stage::CP ? "cp" : c.stage == Stage::SFT ? "sft" : "dpo";
  kv("stage", stage);
  kv("lora_rank", std::to_string(c.lora_rank));
  kv("lora_alpha", std::to_string(c.lora_alpha));
  kv("learning_rate", c.learning_rate);
  kv("scheduler", c.scheduler);
  kv("per_device_batch", std::to_string(c.per_device_batch));
  kv("grad_accum", std::to_string(c.grad_accum));
  kv("epochs", std::to_string(c.epochs));
  kv("loss_on_responses_only", c.loss_on_responses_only ? "true" : "false");
  if (c.beta) {
    kv("beta", util::fmt_sig(*c.beta, 12));
    kv("beta_is_default", c.beta_is_default ? "true" : "false");
  }
  if (!c.artifact_defaults.empty()) {
    std::string joined;
    for (const auto& k : c.artifact_defaults) {
      if (!joined.empty()) joined += ',';
      joined += k;
    }
    kv("artifact_defaults", joined);
  }
  return out;
}

}  // namespace medtk::corpus
