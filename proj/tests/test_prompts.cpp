// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "medtk/error.hpp"
#include "medtk/prompts.hpp"
#include "support.hpp"

using namespace medtk;
using namespace medtk::prompts;
using corpus::QaItem;

namespace {

PromptTemplate two_letter_template() {
  PromptTemplate t;
  t.dataset = Dataset::MedQa;
  t.has_context = false;
  t.option_letters = {"A", "B"};
  return t;
}

QaItem medqa_demo() {
  auto items = corpus::ingest(test::fixture_path("golden_items_medqa.jsonl"),
                              corpus::Schema::QaMedQa)
                   .items;
  return items.at(0);
}

std::vector<QaItem> train_items() {
  return corpus::ingest(test::fixture_path("train_items_medqa.jsonl"),
                        corpus::Schema::QaMedQa)
      .items;
}

}  // namespace

TEST_CASE("render_mcqa layout") {
  QaItem item;
  item.id = "i";
  item.question = "Q?";
  item.choices = {"x", "y"};
  item.answer_index = 0;
  RenderedPrompt rp = render_mcqa(item, two_letter_template());
  CHECK(rp.prompt_text == "Q?\n(A) x\n(B) y\nAnswer:");
  REQUIRE(rp.candidates.size() == 2);
  CHECK(rp.candidates[0] == " (A) x");
  CHECK(rp.candidates[1] == " (B) y");
  CHECK(rp.gold_index == 0);
}

TEST_CASE("template mismatch errors") {
  QaItem item;
  item.id = "i";
  item.question = "Q?";
  item.choices = {"a", "b", "c", "d"};
  item.answer_index = 0;
  auto medqa = PromptTemplate::for_dataset(Dataset::MedQa);  // expects 5
  CHECK_THROWS_AS(render_mcqa(item, medqa), Error);

  auto pubmed = PromptTemplate::for_dataset(Dataset::PubMedQa);
  QaItem noctx;
  noctx.id = "p";
  noctx.question = "Q?";
  noctx.choices = {"yes", "no", "maybe"};
  noctx.answer_index = 0;
  try {
    render_mcqa(noctx, pubmed);
    FAIL("expected MissingContext");
  } catch (const Error& e) {
    CHECK(e.code() == Err::MissingContext);
  }

  QaItem surprise = noctx;
  surprise.context = "ctx";
  CHECK_THROWS_AS(render_mcqa(surprise, two_letter_template()), Error);
}

TEST_CASE("pubmedqa context leads the prompt") {
  auto items = corpus::ingest(test::fixture_path("golden_items_pubmedqa.jsonl"),
                              corpus::Schema::QaPubMedQa)
                   .items;
  auto tmpl = PromptTemplate::for_dataset(Dataset::PubMedQa);
  RenderedPrompt rp = render_mcqa(items[0], tmpl);
  CHECK(rp.prompt_text.rfind(*items[0].context + "\n\n", 0) == 0);
  CHECK(rp.prompt_text == test::read_golden("pubmedqa_0shot.txt"));
}

TEST_CASE("medqa golden files") {
  auto tmpl = PromptTemplate::for_dataset(Dataset::MedQa);
  QaItem item = medqa_demo();

  CHECK(render_mcqa(item, tmpl).prompt_text == test::read_golden("medqa_0shot.txt"));
  CHECK(render_cot(item, tmpl).prompt_text == test::read_golden("medqa_cot.txt"));
  CHECK(assemble_fewshot(item, train_items(), tmpl).prompt_text ==
        test::read_golden("medqa_5shot.txt"));
}

TEST_CASE("few-shot assembly") {
  auto tmpl = two_letter_template();
  QaItem target;
  target.id = "t";
  target.question = "Q?";
  target.choices = {"a", "b"};
  target.answer_index = 1;

  SUBCASE("k = 0 equals plain rendering") {
    RenderedPrompt plain = render_mcqa(target, tmpl);
    RenderedPrompt zero = assemble_fewshot(target, {}, tmpl);
    CHECK(zero.prompt_text == plain.prompt_text);
    CHECK(zero.candidates == plain.candidates);
  }

  SUBCASE("k = 1 prefixes the solved exemplar") {
    QaItem ex;
    ex.id = "e";
    ex.question = "Q1";
    ex.choices = {"x", "y"};
    ex.answer_index = 0;
    RenderedPrompt rp = assemble_fewshot(target, {ex}, tmpl);
    CHECK(rp.prompt_text.rfind("Q1\n(A) x\n(B) y\nAnswer: (A) x\n\n", 0) == 0);
    CHECK(rp.candidates == render_mcqa(target, tmpl).candidates);
  }

  SUBCASE("exemplar without a gold answer is rejected") {
    QaItem ex;
    ex.id = "e";
    ex.question = "Q1";
    ex.choices = {"x", "y"};
    try {
      assemble_fewshot(target, {ex}, tmpl);
      FAIL("expected ExemplarMissingAnswer");
    } catch (const Error& e) {
      CHECK(e.code() == Err::ExemplarMissingAnswer);
    }
  }
}

TEST_CASE("k exemplars leave exactly k solved answers before the final marker") {
  auto tmpl = PromptTemplate::for_dataset(Dataset::MedQa);
  QaItem item = medqa_demo();
  auto pool = train_items();
  for (std::size_t k = 0; k <= pool.size(); ++k) {
    std::vector<QaItem> ex(pool.begin(), pool.begin() + static_cast<long>(k));
    std::string text = assemble_fewshot(item, ex, tmpl).prompt_text;
    std::size_t count = 0, pos = 0;
    while ((pos = text.find("Answer: (", pos)) != std::string::npos) {
      ++count;
      pos += 9;
    }
    REQUIRE(count == k);
    CHECK(text.rfind("Answer:") == text.size() - 7);
  }
}

TEST_CASE("rendering is deterministic") {
  auto tmpl = PromptTemplate::for_dataset(Dataset::MedQa);
  QaItem item = medqa_demo();
  RenderedPrompt a = render_mcqa(item, tmpl);
  RenderedPrompt b = render_mcqa(item, tmpl);
  CHECK(a.prompt_text == b.prompt_text);
  CHECK(a.candidates == b.candidates);
  CHECK(a.prompt_text.find('\r') == std::string::npos);
}

TEST_CASE("gold candidate matches the gold choice") {
  auto tmpl = PromptTemplate::for_dataset(Dataset::MedQa);
  for (const QaItem& item : train_items()) {
    RenderedPrompt rp = render_mcqa(item, tmpl);
    REQUIRE(rp.gold_index.has_value());
    const std::string& cand =
        rp.candidates[static_cast<std::size_t>(*rp.gold_index)];
    CHECK(cand.find(item.choices[static_cast<std::size_t>(*item.answer_index)]) !=
          std::string::npos);
  }
}

TEST_CASE("cot instruction and stacking guard") {
  CHECK(cot_instruction().rfind("The following is a multiple choice question "
                                "about medical knowledge.",
                                0) == 0);
  CHECK(cot_instruction().find("Solve it in a step-by-step fashion") !=
        std::string::npos);

  auto tmpl = PromptTemplate::for_dataset(Dataset::MedQa);
  RenderedPrompt rp = render_cot(medqa_demo(), tmpl);
  CHECK(rp.cot);
  try {
    apply_cot(rp);
    FAIL("expected CotAlreadyApplied");
  } catch (const Error& e) {
    CHECK(e.code() == Err::CotAlreadyApplied);
  }
}

TEST_CASE("exemplar selection is seeded and stable") {
  auto pool = train_items();
  auto a = select_exemplars(pool, 3, 42);
  auto b = select_exemplars(pool, 3, 42);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);

  auto all = select_exemplars(pool, 99, 42);
  CHECK(all.size() == pool.size());

  // different seeds give a different prefix for at least one of a few seeds
  bool differs = false;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    auto c = select_exemplars(pool, 3, seed);
    for (std::size_t i = 0; i < 3; ++i) differs = differs || c[i].id != a[i].id;
  }
  CHECK(differs);
}
