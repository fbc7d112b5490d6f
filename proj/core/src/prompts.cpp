// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/prompts.hpp"

#include <numeric>

#include "medtk/error.hpp"
#include "medtk/util.hpp"

namespace medtk::prompts {

Dataset dataset_from_name(const std::string& name) {
  switch (corpus::schema_from_name(name)) {
    case corpus::Schema::QaMedMcqa: return Dataset::MedMcqa;
    case corpus::Schema::QaMedQa: return Dataset::MedQa;
    case corpus::Schema::QaPubMedQa: return Dataset::PubMedQa;
    case corpus::Schema::QaUsmle1: return Dataset::Usmle1;
    case corpus::Schema::QaUsmle2: return Dataset::Usmle2;
    case corpus::Schema::QaUsmle3: return Dataset::Usmle3;
    case corpus::Schema::Corpus: break;
  }
  throw Error(Err::UnknownSchema, "not a question dataset: " + name);
}

const char* dataset_name(Dataset d) {
  return corpus::schema_name(dataset_schema(d));
}

corpus::Schema dataset_schema(Dataset d) {
  switch (d) {
    case Dataset::MedMcqa: return corpus::Schema::QaMedMcqa;
    case Dataset::MedQa: return corpus::Schema::QaMedQa;
    case Dataset::PubMedQa: return corpus::Schema::QaPubMedQa;
    case Dataset::Usmle1: return corpus::Schema::QaUsmle1;
    case Dataset::Usmle2: return corpus::Schema::QaUsmle2;
    case Dataset::Usmle3: return corpus::Schema::QaUsmle3;
  }
  throw Error(Err::UnknownSchema, "bad dataset enum");
}

PromptTemplate PromptTemplate::for_dataset(Dataset d) {
  PromptTemplate t;
  t.dataset = d;
  corpus::Schema s = dataset_schema(d);
  t.has_context = corpus::schema_has_context(s);
  int n = corpus::schema_choice_count(s);
  for (int i = 0; i < n; ++i) t.option_letters.push_back(std::string(1, char('A' + i)));
  return t;
}

namespace {

void check_item(const QaItem& item, const PromptTemplate& tmpl) {
  if (item.choices.size() != tmpl.option_letters.size())
    throw Error(Err::ChoiceCountMismatch,
                "item " + item.id + " has " + std::to_string(item.choices.size()) +
                    " choices, template expects " +
                    std::to_string(tmpl.option_letters.size()))
        .with("item_id", item.id);
  if (tmpl.has_context && !item.context)
    throw Error(Err::MissingContext, "item " + item.id + " lacks required context")
        .with("item_id", item.id);
  if (!tmpl.has_context && item.context)
    throw Error(Err::ContextMismatch,
                "item " + item.id + " carries a context but the template takes none")
        .with("item_id", item.id);
}

std::string render_body(const QaItem& item, const PromptTemplate& tmpl) {
  std::string out;
  if (tmpl.has_context) {
    out += *item.context;
    out += "\n\n";
  }
  out += item.question;
  for (std::size_t i = 0; i < item.choices.size(); ++i) {
    out += "\n(";
    out += tmpl.option_letters[i];
    out += ") ";
    out += item.choices[i];
  }
  out += "\nAnswer:";
  return out;
}

std::string candidate_text(const PromptTemplate& tmpl, std::size_t i,
                           const std::string& choice) {
  return " (" + tmpl.option_letters[i] + ") " + choice;
}

}  // namespace

RenderedPrompt render_mcqa(const QaItem& item, const PromptTemplate& tmpl) {
  check_item(item, tmpl);
  RenderedPrompt rp;
  rp.item_id = item.id;
  rp.prompt_text = render_body(item, tmpl);
  for (std::size_t i = 0; i < item.choices.size(); ++i)
    rp.candidates.push_back(candidate_text(tmpl, i, item.choices[i]));
  rp.gold_index = item.answer_index;
  return rp;
}

RenderedPrompt assemble_fewshot(const QaItem& item,
                                const std::vector<QaItem>& exemplars,
                                const PromptTemplate& tmpl,
                                const PromptTemplate* exemplar_tmpl) {
  RenderedPrompt target = render_mcqa(item, tmpl);
  if (exemplars.empty()) return target;
  const PromptTemplate& etmpl = exemplar_tmpl ? *exemplar_tmpl : tmpl;
  std::string out;
  for (const QaItem& ex : exemplars) {
    if (!ex.answer_index)
      throw Error(Err::ExemplarMissingAnswer, "exemplar " + ex.id + " has no gold answer")
          .with("item_id", ex.id);
    check_item(ex, etmpl);
    out += render_body(ex, etmpl);
    out += candidate_text(etmpl, static_cast<std::size_t>(*ex.answer_index),
                          ex.choices[static_cast<std::size_t>(*ex.answer_index)]);
    out += "\n\n";
  }
  out += target.prompt_text;
  target.prompt_text = std::move(out);
  return target;
}

const std::string& cot_instruction() {
  static const std::string text =
      "The following is a multiple choice question about medical knowledge. "
      "Solve it in a step-by-step fashion, starting by summarizing the "
      "available information. Output a single option from the four options "
      "as the final answer.";
  return text;
}

RenderedPrompt apply_cot(const RenderedPrompt& rp) {
  if (rp.cot)
    throw Error(Err::CotAlreadyApplied,
                "prompt for item " + rp.item_id + " already carries the CoT block")
        .with("item_id", rp.item_id);
  RenderedPrompt out = rp;
  out.prompt_text = cot_instruction() + "\n\n" + rp.prompt_text;
  out.cot = true;
  return out;
}

RenderedPrompt render_cot(const QaItem& item, const PromptTemplate& tmpl) {
  return apply_cot(render_mcqa(item, tmpl));
}

std::vector<QaItem> select_exemplars(const std::vector<QaItem>& pool,
                                     std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  util::seeded_shuffle_indices(idx, seed);
  std::vector<QaItem> out;
  for (std::size_t i = 0; i < idx.size() && out.size() < k; ++i)
    out.push_back(pool[idx[i]]);
  return out;
}

}  // namespace medtk::prompts
