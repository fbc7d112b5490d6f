// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_PROMPTS_HPP
#define MEDTK_PROMPTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medtk/corpus.hpp"

namespace medtk::prompts {

using corpus::QaItem;

enum class Dataset { MedMcqa, MedQa, PubMedQa, Usmle1, Usmle2, Usmle3 };

Dataset dataset_from_name(const std::string& name);  // throws UnknownSchema
const char* dataset_name(Dataset d);
corpus::Schema dataset_schema(Dataset d);

struct PromptTemplate {
  Dataset dataset = Dataset::MedQa;
  bool has_context = false;
  std::vector<std::string> option_letters;  // ("A", "B", ...)

  static PromptTemplate for_dataset(Dataset d);
};

// Exact prompt bytes plus the per-choice continuation candidates. All
// rendering uses LF newlines and is byte-deterministic.
struct RenderedPrompt {
  std::string item_id;
  std::string prompt_text;               // ends with "Answer:"
  std::vector<std::string> candidates;   // " (A) <choice>" per choice, in order
  std::optional<int> gold_index;
  bool cot = false;
};

// body: [context "\n\n"] question "\n" "(A) c0" ... "\nAnswer:"
RenderedPrompt render_mcqa(const QaItem& item, const PromptTemplate& tmpl);

// Exemplar bodies with their gold candidate appended after "Answer:", joined
// by one blank line, then the target body. Exemplars may use a different
// template (train split of another dataset) when the target has none.
RenderedPrompt assemble_fewshot(const QaItem& item,
                                const std::vector<QaItem>& exemplars,
                                const PromptTemplate& tmpl,
                                const PromptTemplate* exemplar_tmpl = nullptr);

const std::string& cot_instruction();

// Prefixes the step-by-step instruction block; refuses to stack.
RenderedPrompt apply_cot(const RenderedPrompt& rp);
RenderedPrompt render_cot(const QaItem& item, const PromptTemplate& tmpl);

// First k items of the pool under a seeded shuffle, fixed per run.
std::vector<QaItem> select_exemplars(const std::vector<QaItem>& pool,
                                     std::size_t k, std::uint64_t seed);

}  // namespace medtk::prompts

#endif  // MEDTK_PROMPTS_HPP
