// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "medtk/error.hpp"
#include "medtk/pref.hpp"
#include "support.hpp"

using namespace medtk;
using namespace medtk::pref;

namespace {

constexpr const char* kAxes[] = {
    "Scientific consensus:",
    "Extent of possible harm:",
    "Evidence of correct comprehension:",
    "Evidence of correct retrieval:",
    "Evidence of correct reasoning:",
    "Evidence of incorrect comprehension:",
    "Evidence of incorrect retrieval:",
    "Evidence of incorrect reasoning:",
    "Inappropriate/incorrect content:",
    "Missing content:",
    "Possibility of bias:",
};

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

// straightforward reimplementation of the chance-corrected statistic,
// used only as an oracle
double kappa_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  double n = static_cast<double>(a.size());
  double po = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) po += a[i] == b[i] ? 1.0 : 0.0;
  po /= n;
  double pe = 0.0;
  for (int c : {1, 2}) {
    double pa = 0.0, pb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      pa += a[i] == c ? 1.0 : 0.0;
      pb += b[i] == c ? 1.0 : 0.0;
    }
    pe += (pa / n) * (pb / n);
  }
  return (po - pe) / (1.0 - pe);
}

}  // namespace

TEST_CASE("judge prompt matches the committed golden file") {
  std::string prompt = build_judge_prompt(
      "What should I do for a mild tension headache?",
      "Rest, hydration, and an over-the-counter analgesic such as ibuprofen "
      "are reasonable first steps.",
      "Headaches are never serious and you should simply ignore them.");
  CHECK(prompt == test::read_golden("judge_prompt.txt"));
}

TEST_CASE("judge prompt carries each axis exactly once and no placeholders") {
  std::string prompt = build_judge_prompt("q?", "first answer", "second answer");
  for (const char* axis : kAxes) CHECK(count_occurrences(prompt, axis) == 1);
  CHECK(prompt.find("#question") == std::string::npos);
  CHECK(prompt.find("#answer1") == std::string::npos);
  CHECK(prompt.find("#answer2") == std::string::npos);
  CHECK(prompt.find("q?") != std::string::npos);
  CHECK(prompt.find("first answer") != std::string::npos);

  CHECK_THROWS_AS(build_judge_prompt("", "a", "b"), Error);
  CHECK_THROWS_AS(build_judge_prompt("q", "", "b"), Error);
  CHECK_THROWS_AS(build_judge_prompt("q", "a", ""), Error);

  // byte-stable across calls
  CHECK(prompt == build_judge_prompt("q?", "first answer", "second answer"));
}

TEST_CASE("parse_judge_choice rule cascade") {
  CHECK(parse_judge_choice("2") == 2);
  CHECK(parse_judge_choice("...Answer 1 is better because...") == 1);
  CHECK(parse_judge_choice("I choose option 2.") == 2);
  CHECK(parse_judge_choice("first 1 then finally 2") == 2);  // last token wins
  CHECK(parse_judge_choice("scored 91 out of 100, but answer 1 wins") == 1);
  CHECK(parse_judge_choice("Answer 1st option is the stronger one") == 1);
  CHECK(parse_judge_choice("the year 2021 was mentioned; ANSWER 2nd is right") == 2);
  CHECK_THROWS_AS(parse_judge_choice("both are fine"), Error);
  CHECK_THROWS_AS(parse_judge_choice(""), Error);
  try {
    parse_judge_choice("no verdict here");
    FAIL("expected UnparseableVerdict");
  } catch (const Error& e) {
    CHECK(e.code() == Err::UnparseableVerdict);
  }
}

TEST_CASE("agreement basics") {
  SUBCASE("identical lists agree perfectly") {
    AgreementReport r = agreement({1, 2, 1, 2}, {1, 2, 1, 2});
    CHECK(r.kappa == 1.0);
    CHECK(r.accuracy == 1.0);
  }
  SUBCASE("worked example") {
    AgreementReport r = agreement({1, 1, 2, 2}, {1, 2, 2, 2});
    CHECK(r.observed_agreement == 0.75);
    CHECK(r.expected_agreement == 0.5);
    CHECK(r.kappa == 0.5);  // exact in binary floating point
    CHECK(r.accuracy == 0.75);
    CHECK(r.n == 4);
  }
  SUBCASE("degenerate constant raters") {
    AgreementReport r = agreement({1, 1, 1}, {1, 1, 1});
    CHECK(r.kappa == 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(agreement({1, 2}, {1}), Error);
    CHECK_THROWS_AS(agreement({}, {}), Error);
    CHECK_THROWS_AS(agreement({1, 3}, {1, 2}), Error);
  }
}

TEST_CASE("agreement matches the closed form on random vectors") {
  test::Rng rng(20260809);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = rng.integer(1, 60);
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform() < 0.5 ? 1 : 2;
      b[i] = rng.uniform() < 0.5 ? 1 : 2;
    }
    // skip draws where chance agreement is exactly 1 (handled separately)
    bool a_const = std::count(a.begin(), a.end(), 1) % n == 0;
    bool b_const = std::count(b.begin(), b.end(), 1) % n == 0;
    if (a_const && b_const && a[0] == b[0]) continue;
    AgreementReport r = agreement(a, b);
    REQUIRE(std::abs(r.kappa - kappa_oracle(a, b)) < 1e-12);
  }
}

TEST_CASE("dpo loss values") {
  DpoParams p;
  p.beta = 0.7;
  CHECK(std::abs(dpo_loss(p) - std::log(2.0)) < 1e-12);  // delta = 0

  DpoParams d2;
  d2.beta = 1.0;
  d2.policy_chosen = 2.0;  // delta = 2 with zero refs and zero rejected
  CHECK(std::abs(dpo_loss(d2) - std::log1p(std::exp(-2.0))) < 1e-12);
  CHECK(dpo_loss(d2) == doctest::Approx(0.126928011).epsilon(1e-9));

  DpoParams dneg;
  dneg.beta = 1.0;
  dneg.policy_chosen = -2.0;  // delta = -2
  CHECK(std::abs(dpo_loss(dneg) - (2.0 + std::log1p(std::exp(-2.0)))) < 1e-12);
  CHECK(dpo_loss(dneg) == doctest::Approx(2.126928011).epsilon(1e-9));

  SUBCASE("huge margins stay finite") {
    DpoParams big;
    big.beta = 100.0;
    big.policy_chosen = 7.0;
    CHECK(dpo_loss(big) >= 0.0);
    big.policy_chosen = -7.0;
    CHECK(std::isfinite(dpo_loss(big)));
  }

  SUBCASE("non-finite input is rejected") {
    DpoParams bad;
    bad.policy_chosen = std::nan("");
    CHECK_THROWS_AS(dpo_loss(bad), Error);
    DpoParams badbeta;
    badbeta.beta = -1.0;
    CHECK_THROWS_AS(dpo_loss(badbeta), Error);
  }
}

TEST_CASE("dpo loss is monotone in delta and shift invariant") {
  test::Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    DpoParams p;
    p.beta = rng.uniform(0.05, 2.0);
    p.policy_chosen = rng.uniform(-6.0, 0.0);
    p.policy_rejected = rng.uniform(-6.0, 0.0);
    p.ref_chosen = rng.uniform(-6.0, 0.0);
    p.ref_rejected = rng.uniform(-6.0, 0.0);

    DpoParams higher = p;
    higher.policy_chosen += rng.uniform(0.01, 2.0);
    REQUIRE(dpo_loss(higher) < dpo_loss(p));

    double c = rng.uniform(-20.0, 20.0);
    DpoParams shifted = p;
    shifted.policy_chosen += c;
    shifted.policy_rejected += c;
    shifted.ref_chosen += c;
    shifted.ref_rejected += c;
    REQUIRE(std::abs(dpo_loss(shifted) - dpo_loss(p)) < 1e-9);
  }
}

TEST_CASE("dpo gradients") {
  DpoParams p;
  p.beta = 0.1;
  DpoGrad g = dpo_grad(p);  // delta = 0 -> sigmoid = 1/2
  CHECK(g.d_policy_chosen == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(g.d_policy_rejected == doctest::Approx(0.05).epsilon(1e-12));

  SUBCASE("beta to zero sends gradients to zero") {
    DpoParams tiny;
    tiny.beta = 1e-12;
    tiny.policy_chosen = 2.0;
    DpoGrad gt = dpo_grad(tiny);
    CHECK(std::abs(gt.d_policy_chosen) < 1e-11);
  }

  SUBCASE("gradients are opposite and equal in magnitude") {
    test::Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
      DpoParams q;
      q.beta = rng.uniform(0.01, 3.0);
      q.policy_chosen = rng.uniform(-8.0, 0.0);
      q.policy_rejected = rng.uniform(-8.0, 0.0);
      DpoGrad gq = dpo_grad(q);
      REQUIRE(gq.d_policy_chosen == -gq.d_policy_rejected);
      REQUIRE(gq.d_policy_chosen <= 0.0);
    }
  }
}

TEST_CASE("dpo gradients match central finite differences") {
  test::Rng rng(20260809);
  double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    DpoParams p;
    p.beta = rng.uniform(0.1, 1.5);
    p.policy_chosen = rng.uniform(-4.0, -0.1);
    p.policy_rejected = rng.uniform(-4.0, -0.1);
    p.ref_chosen = rng.uniform(-4.0, -0.1);
    p.ref_rejected = rng.uniform(-4.0, -0.1);
    DpoGrad g = dpo_grad(p);

    DpoParams up = p, dn = p;
    up.policy_chosen += h;
    dn.policy_chosen -= h;
    double fd_w = (dpo_loss(up) - dpo_loss(dn)) / (2 * h);
    up = p;
    dn = p;
    up.policy_rejected += h;
    dn.policy_rejected -= h;
    double fd_l = (dpo_loss(up) - dpo_loss(dn)) / (2 * h);

    REQUIRE(std::abs(g.d_policy_chosen - fd_w) / std::abs(fd_w) < 1e-6);
    REQUIRE(std::abs(g.d_policy_rejected - fd_l) / std::abs(fd_l) < 1e-6);
  }
}

TEST_CASE("toy policy training") {
  auto pairs = pairs_from_jsonl(test::read_fixture("pairs_single.jsonl"));

  SUBCASE("zero steps leaves the policy unchanged") {
    FitResult fit = fit_toy_policy(pairs, 0, 0.1, 0.1);
    CHECK(fit.final_margins == fit.initial_margins);
    CHECK(fit.loss_history.size() == 1);
  }

  SUBCASE("a single pair gains a positive margin within 100 steps") {
    FitResult fit = fit_toy_policy(pairs, 100, 0.1, 0.1);
    REQUIRE(fit.final_margins.size() == 1);
    CHECK(fit.initial_margins[0] == 0.0);
    CHECK(fit.final_margins[0] > 0.0);
    CHECK(fit.final_margins[0] > fit.initial_margins[0]);
    // loss never rises across a 10-step window
    const auto& hist = fit.loss_history;
    for (std::size_t t = 10; t < hist.size(); ++t)
      REQUIRE(hist[t] <= hist[t - 10] + 1e-12);
  }

  SUBCASE("conflicting pairs settle at the symmetric point") {
    auto conflict = pairs_from_jsonl(test::read_fixture("pairs_conflict.jsonl"));
    FitResult fit = fit_toy_policy(conflict, 200, 0.1, 0.5);
    // gradients cancel exactly, margins stay 0, each pair sits at ln 2
    CHECK(std::abs(fit.final_margins[0]) < 1e-12);
    CHECK(std::abs(fit.final_margins[1]) < 1e-12);
    CHECK(std::abs(fit.loss_history.back() - 2.0 * std::log(2.0)) < 1e-12);
  }

  SUBCASE("divergence guard aborts with diagnostics") {
    std::vector<PreferencePair> mixed;
    auto mk = [](std::string id, std::string w, std::string l) {
      PreferencePair p;
      p.id = std::move(id);
      p.prompt = "q";
      p.chosen = std::move(w);
      p.rejected = std::move(l);
      p.judge_label = 1;
      return p;
    };
    mixed.push_back(mk("p1", "A", "B"));
    mixed.push_back(mk("p2", "B", "A"));
    mixed.push_back(mk("p3", "B", "A"));
    try {
      fit_toy_policy(mixed, 50, 100.0, 1.0);
      FAIL("expected Divergence");
    } catch (const Error& e) {
      CHECK(e.code() == Err::Divergence);
      CHECK(e.context().count("step") == 1);
    }
  }
}

TEST_CASE("preference pair construction and serialization") {
  auto triples = triples_from_jsonl(test::read_fixture("triples.jsonl"));
  REQUIRE(triples.size() == 2);
  CHECK(triples[0].source_tags.at("answer1") == "doctor");

  PreferencePair p1 = make_preference_pair(triples[0], 1, {{"md1", 1}});
  CHECK(p1.chosen == triples[0].answer1);
  CHECK(p1.rejected == triples[0].answer2);
  PreferencePair p2 = make_preference_pair(triples[0], 2);
  CHECK(p2.chosen == triples[0].answer2);

  CHECK_THROWS_AS(make_preference_pair(triples[0], 3), Error);

  std::string jsonl = pairs_to_jsonl({p1, p2});
  auto back = pairs_from_jsonl(jsonl);
  REQUIRE(back.size() == 2);
  CHECK(back[0].chosen == p1.chosen);
  CHECK(back[0].human_labels.at("md1") == 1);
  CHECK(back[1].judge_label == 2);
}
