// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_CORPUS_HPP
#define MEDTK_CORPUS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace medtk::corpus {

struct CorpusRecord {
  std::string id;
  std::string text;
  std::string source;
  std::string license;
  std::int64_t token_count = 0;  // recomputed on parse with the active tokenizer
};

struct QaItem {
  std::string id;
  std::string question;
  std::vector<std::string> choices;           // >= 2 entries
  std::optional<int> answer_index;            // in [0, choices.size())
  std::optional<std::string> context;         // abstract-bearing datasets only
};

struct CorpusStats {
  std::int64_t sample_count = 0;
  std::int64_t token_count = 0;
  std::int64_t byte_size = 0;  // UTF-8 bytes of the content fields
};

CorpusStats merge(const CorpusStats& a, const CorpusStats& b);

// One row schema per supported input file shape. The qa_* schemas pin the
// choice count (and, for PubMedQA, a mandatory context field).
enum class Schema {
  Corpus,
  QaMedMcqa,   // 4 choices
  QaMedQa,     // 5 choices
  QaPubMedQa,  // 3 choices, context required
  QaUsmle1,    // 5 choices
  QaUsmle2,    // 6 choices
  QaUsmle3,    // 5 choices
};

Schema schema_from_name(const std::string& name);  // throws UnknownSchema
const char* schema_name(Schema s);
bool schema_is_qa(Schema s);
int schema_choice_count(Schema s);  // qa schemas only
bool schema_has_context(Schema s);

struct Tokenizer {
  enum class Kind { Whitespace, Vocab } kind = Kind::Whitespace;
  // Vocab mode: greedy longest-match against these pieces within each
  // whitespace-separated word; an unmatched byte counts as one token.
  std::vector<std::string> vocab;

  static Tokenizer whitespace() { return {}; }
  static Tokenizer from_vocab_file(const std::string& path);
};

// Removes URL tokens (scheme:// and www.-prefixed) and canonicalizes
// whitespace: space/tab runs become one space, any run containing a newline
// becomes one LF, and the ends are trimmed. Idempotent.
std::string clean_text(const std::string& raw);

std::int64_t count_tokens(const std::string& text, const Tokenizer& tok);

struct IngestResult {
  std::vector<CorpusRecord> records;  // Schema::Corpus
  std::vector<QaItem> items;          // qa schemas
  CorpusStats stats;
};

// Parses one JSON object per line; fails with MalformedRecord carrying the
// first offending line number. `clean` applies clean_text to corpus text
// before counting tokens (qa items are never altered).
IngestResult ingest(const std::string& path, Schema schema,
                    const Tokenizer& tok = Tokenizer::whitespace(),
                    bool clean = false);
IngestResult ingest_lines(const std::vector<std::string>& lines, Schema schema,
                          const Tokenizer& tok = Tokenizer::whitespace(),
                          bool clean = false);

std::string serialize(const std::vector<CorpusRecord>& records);
std::string serialize(const std::vector<QaItem>& items);

CorpusStats stats_of(const std::vector<CorpusRecord>& records,
                     const Tokenizer& tok);
CorpusStats stats_of(const std::vector<QaItem>& items, const Tokenizer& tok);

enum class Stage { CP, SFT, DPO };

Stage stage_from_name(const std::string& name);  // throws ConfigInvalid

struct RecipeConfig {
  Stage stage = Stage::CP;
  int lora_rank = 0;
  int lora_alpha = 0;
  std::string learning_rate;  // kept textual so emitted files are exact
  std::string scheduler;
  int per_device_batch = 0;
  int grad_accum = 0;
  int epochs = 0;
  bool loss_on_responses_only = false;
  std::optional<double> beta;   // DPO only
  bool beta_is_default = false;
  // keys whose values are artifact defaults rather than published settings
  std::vector<std::string> artifact_defaults;
};

RecipeConfig recipe_for(Stage stage);
std::string serialize_recipe(const RecipeConfig& cfg);  // flat key=value lines

}  // namespace medtk::corpus

#endif  // MEDTK_CORPUS_HPP
