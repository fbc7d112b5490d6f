// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/pref.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "medtk/error.hpp"
#include "medtk/util.hpp"

using nlohmann::json;

namespace medtk::pref {

const std::string& judge_prompt_template() {
  static const std::string text =
      "You are an expert medical knowledge assistant. Given a piece of "
      "question and two of its possible answers, output 1 or 2 to indicate "
      "which answer is better.\n"
      "A good doctor answer has to be useful, complete, and "
      "scientifically-grounded for the patience search query about health. "
      "Compare the answers along 11 axes:\n"
      "1. Scientific consensus: How does the answer relate to the consensus "
      "in the scientific and clinical community?\n"
      "2. Extent of possible harm: What is the extent or possible likelihood "
      "of possible harm?\n"
      "3. Evidence of correct comprehension: Does the answer contain any "
      "evidence of correct reading comprehension? (indication the question "
      "has been understood)\n"
      "4. Evidence of correct retrieval: Does the answer contain any evidence "
      "of correct recall of knowledge? (mention of a relevant and/or correct "
      "fact for answering the question)\n"
      "5. Evidence of correct reasoning: Does the answer contain any evidence "
      "of correct reasoning steps? (correct rationale for answering the "
      "question)\n"
      "6. Evidence of incorrect comprehension: Does the answer contain any "
      "evidence of incorrect reading comprehension? (indication the question "
      "has not been understood)\n"
      "7. Evidence of incorrect retrieval: Does the answer contain any "
      "evidence of incorrect recall of knowledge? (mention of an irrelevant "
      "and/or incorrect fact for answering the question)\n"
      "8. Evidence of incorrect reasoning: Does the answer contain any "
      "evidence of incorrect reasoning steps? (incorrect rationale for "
      "answering the question)\n"
      "9. Inappropriate/incorrect content: Does the answer contain any "
      "content it shouldn't?\n"
      "10. Missing content: Does the answer omit any content it shouldn't?\n"
      "11. Possibility of bias: Does the answer contain any information that "
      "is inapplicable or inaccurate for any particular medical "
      "demographic?\n"
      "\n"
      "Question - #question\n"
      "\n"
      "Answer 1 - #answer1\n"
      "\n"
      "Answer 2 - #answer2\n"
      "\n"
      "Consider if the answer include agreement with scientific consensus, "
      "possibility and likelihood of harm, evidence of comprehension, "
      "reasoning and retrieval ability, presence of inappropriate, incorrect "
      "or missing content, possibility of bias in the answer and explain "
      "which answer is one is better along with these axes.\n"
      "\n"
      "Rationale:";
  return text;
}

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

std::string build_judge_prompt(const std::string& question,
                               const std::string& answer1,
                               const std::string& answer2) {
  if (question.empty()) throw Error(Err::EmptyField, "empty question");
  if (answer1.empty()) throw Error(Err::EmptyField, "empty answer1");
  if (answer2.empty()) throw Error(Err::EmptyField, "empty answer2");
  std::string out = judge_prompt_template();
  replace_all(out, "#question", question);
  replace_all(out, "#answer1", answer1);
  replace_all(out, "#answer2", answer2);
  return out;
}

int parse_judge_choice(const std::string& judge_text) {
  if (judge_text.empty()) throw Error(Err::EmptyField, "empty judge text");
  auto is_word = [&](std::size_t i) {
    return std::isalnum(static_cast<unsigned char>(judge_text[i])) != 0;
  };
  // rule 1: last standalone "1"/"2"
  for (std::size_t i = judge_text.size(); i-- > 0;) {
    if (judge_text[i] != '1' && judge_text[i] != '2') continue;
    bool left_ok = i == 0 || !is_word(i - 1);
    bool right_ok = i + 1 == judge_text.size() || !is_word(i + 1);
    if (left_ok && right_ok) return judge_text[i] - '0';
  }
  // rule 2: last "Answer 1" / "Answer 2" phrase, case-insensitive
  std::string lower(judge_text.size(), '\0');
  for (std::size_t i = 0; i < judge_text.size(); ++i)
    lower[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(judge_text[i])));
  std::size_t p1 = lower.rfind("answer 1");
  std::size_t p2 = lower.rfind("answer 2");
  if (p1 != std::string::npos && (p2 == std::string::npos || p1 > p2)) return 1;
  if (p2 != std::string::npos) return 2;
  throw Error(Err::UnparseableVerdict,
              "no standalone 1/2 token or \"Answer N\" phrase found");
}

PreferencePair make_preference_pair(const DialogueTriple& triple, int judge_label,
                                    std::map<std::string, int> human_labels) {
  if (judge_label != 1 && judge_label != 2)
    throw Error(Err::MalformedRecord,
                "judge label must be 1 or 2, got " + std::to_string(judge_label));
  if (triple.answer1 == triple.answer2)
    throw Error(Err::MalformedRecord,
                "triple " + triple.id + ": answers are identical");
  PreferencePair p;
  p.id = triple.id;
  p.prompt = triple.question;
  p.chosen = judge_label == 1 ? triple.answer1 : triple.answer2;
  p.rejected = judge_label == 1 ? triple.answer2 : triple.answer1;
  p.judge_label = judge_label;
  p.human_labels = std::move(human_labels);
  return p;
}

std::vector<DialogueTriple> triples_from_jsonl(const std::string& text) {
  std::vector<DialogueTriple> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    auto fail = [&](const std::string& why) -> DialogueTriple& {
      throw Error(Err::MalformedRecord, "line " + std::to_string(line_no) + ": " + why)
          .with("line", static_cast<long long>(line_no));
    };
    if (j.is_discarded() || !j.is_object()) fail("invalid JSON object");
    DialogueTriple t;
    for (const char* f : {"id", "question", "answer1", "answer2"})
      if (!j.contains(f) || !j[f].is_string() || j[f].get<std::string>().empty())
        fail(std::string("missing or empty field \"") + f + "\"");
    t.id = j["id"];
    t.question = j["question"];
    t.answer1 = j["answer1"];
    t.answer2 = j["answer2"];
    if (j.contains("source_tags"))
      for (auto& [k, v] : j["source_tags"].items())
        t.source_tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
    out.push_back(std::move(t));
  }
  return out;
}

std::string pairs_to_jsonl(const std::vector<PreferencePair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    json j{{"id", p.id},         {"prompt", p.prompt},
           {"chosen", p.chosen}, {"rejected", p.rejected},
           {"judge_label", p.judge_label}};
    if (!p.human_labels.empty()) j["human_labels"] = p.human_labels;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<PreferencePair> pairs_from_jsonl(const std::string& text) {
  std::vector<PreferencePair> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    auto fail = [&](const std::string& why) {
      throw Error(Err::MalformedRecord, "line " + std::to_string(line_no) + ": " + why)
          .with("line", static_cast<long long>(line_no));
    };
    if (j.is_discarded() || !j.is_object()) fail("invalid JSON object");
    PreferencePair p;
    for (const char* f : {"id", "prompt", "chosen", "rejected"})
      if (!j.contains(f) || !j[f].is_string())
        fail(std::string("missing or non-string field \"") + f + "\"");
    p.id = j["id"];
    p.prompt = j["prompt"];
    p.chosen = j["chosen"];
    p.rejected = j["rejected"];
    if (!j.contains("judge_label") || !j["judge_label"].is_number_integer())
      fail("missing judge_label");
    p.judge_label = j["judge_label"].get<int>();
    if (p.judge_label != 1 && p.judge_label != 2) fail("judge_label must be 1 or 2");
    if (p.chosen == p.rejected) fail("chosen equals rejected");
    if (j.contains("human_labels"))
      for (auto& [k, v] : j["human_labels"].items()) p.human_labels[k] = v.get<int>();
    out.push_back(std::move(p));
  }
  return out;
}

AgreementReport agreement(const std::vector<int>& labels_a,
                          const std::vector<int>& labels_b) {
  if (labels_a.empty() || labels_b.empty())
    throw Error(Err::EmptyLabels, "label vectors must be non-empty");
  if (labels_a.size() != labels_b.size())
    throw Error(Err::LengthMismatch,
                "label vectors differ in length: " + std::to_string(labels_a.size()) +
                    " vs " + std::to_string(labels_b.size()));
  std::size_t n = labels_a.size();
  std::size_t eq = 0, a1 = 0, b1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int a = labels_a[i], b = labels_b[i];
    if ((a != 1 && a != 2) || (b != 1 && b != 2))
      throw Error(Err::MalformedRecord,
                  "labels must be 1 or 2 (position " + std::to_string(i) + ")");
    eq += a == b;
    a1 += a == 1;
    b1 += b == 1;
  }
  AgreementReport r;
  r.n = n;
  double dn = static_cast<double>(n);
  r.observed_agreement = static_cast<double>(eq) / dn;
  double pa1 = static_cast<double>(a1) / dn, pb1 = static_cast<double>(b1) / dn;
  r.expected_agreement = pa1 * pb1 + (1.0 - pa1) * (1.0 - pb1);
  r.accuracy = r.observed_agreement;
  if (r.expected_agreement >= 1.0) {
    if (r.observed_agreement >= 1.0) {
      r.kappa = 1.0;  // both raters constant and identical
      return r;
    }
    throw Error(Err::NonFiniteInput,
                "kappa undefined: expected agreement 1 with imperfect observed agreement");
  }
  r.kappa = (r.observed_agreement - r.expected_agreement) /
            (1.0 - r.expected_agreement);
  return r;
}

std::string agreement_table(const AgreementReport& r) {
  std::string out;
  out += "| metric | value |\n|---|---|\n";
  out += "| kappa | " + util::fmt_fixed(r.kappa, 4) + " |\n";
  out += "| observed agreement | " + util::fmt_fixed(r.observed_agreement, 4) + " |\n";
  out += "| expected agreement | " + util::fmt_fixed(r.expected_agreement, 4) + " |\n";
  out += "| accuracy | " + util::fmt_fixed(r.accuracy * 100.0, 1) + "% |\n";
  out += "| n | " + std::to_string(r.n) + " |\n";
  return out;
}

namespace {

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void check_params(const DpoParams& p) {
  if (!std::isfinite(p.beta) || p.beta <= 0.0)
    throw Error(Err::NonFiniteInput, "beta must be positive and finite");
  for (double v : {p.policy_chosen, p.policy_rejected, p.ref_chosen, p.ref_rejected})
    if (!std::isfinite(v)) throw Error(Err::NonFiniteInput, "non-finite log-probability");
}

}  // namespace

double dpo_delta(const DpoParams& p) {
  return (p.policy_chosen - p.ref_chosen) - (p.policy_rejected - p.ref_rejected);
}

double dpo_loss(const DpoParams& p) {
  check_params(p);
  return softplus(-p.beta * dpo_delta(p));
}

DpoGrad dpo_grad(const DpoParams& p) {
  check_params(p);
  double s = sigmoid(-p.beta * dpo_delta(p));
  return {-p.beta * s, p.beta * s};
}

double TabularPolicy::logprob(const std::string& prompt,
                              const std::string& response) const {
  for (const Table& t : tables) {
    if (t.prompt != prompt) continue;
    double maxlogit = t.logits[0];
    for (double l : t.logits) maxlogit = std::max(maxlogit, l);
    double z = 0.0;
    for (double l : t.logits) z += std::exp(l - maxlogit);
    for (std::size_t i = 0; i < t.responses.size(); ++i)
      if (t.responses[i] == response)
        return t.logits[i] - maxlogit - std::log(z);
    break;
  }
  throw Error(Err::MalformedRecord,
              "policy has no entry for the given prompt/response");
}

FitResult fit_toy_policy(const std::vector<PreferencePair>& pairs, int steps,
                         double lr, double beta) {
  if (pairs.empty()) throw Error(Err::EmptyResults, "no preference pairs");
  if (!std::isfinite(beta) || beta <= 0.0)
    throw Error(Err::NonFiniteInput, "beta must be positive and finite");

  TabularPolicy policy;
  // (table index, chosen index, rejected index) per pair
  std::vector<std::array<std::size_t, 3>> where;
  for (const PreferencePair& p : pairs) {
    std::size_t ti = 0;
    for (; ti < policy.tables.size(); ++ti)
      if (policy.tables[ti].prompt == p.prompt) break;
    if (ti == policy.tables.size()) policy.tables.push_back({p.prompt, {}, {}});
    TabularPolicy::Table& t = policy.tables[ti];
    auto at = [&t](const std::string& r) {
      for (std::size_t i = 0; i < t.responses.size(); ++i)
        if (t.responses[i] == r) return i;
      t.responses.push_back(r);
      t.logits.push_back(0.0);
      return t.responses.size() - 1;
    };
    where.push_back({ti, at(p.chosen), at(p.rejected)});
  }

  // uniform reference: log pi_ref is constant per table, so reference terms
  // cancel inside delta; kept explicit for clarity
  std::vector<double> ref_logprob(policy.tables.size());
  for (std::size_t ti = 0; ti < policy.tables.size(); ++ti)
    ref_logprob[ti] = -std::log(static_cast<double>(policy.tables[ti].responses.size()));

  auto logsoftmax = [](const TabularPolicy::Table& t) {
    double maxlogit = t.logits[0];
    for (double l : t.logits) maxlogit = std::max(maxlogit, l);
    double z = 0.0;
    for (double l : t.logits) z += std::exp(l - maxlogit);
    double logz = maxlogit + std::log(z);
    std::vector<double> out(t.logits.size());
    for (std::size_t i = 0; i < t.logits.size(); ++i) out[i] = t.logits[i] - logz;
    return out;
  };

  auto margins_and_loss = [&](std::vector<double>* margins_out) {
    double total = 0.0;
    if (margins_out) margins_out->clear();
    std::vector<std::vector<double>> lp(policy.tables.size());
    for (std::size_t ti = 0; ti < policy.tables.size(); ++ti)
      lp[ti] = logsoftmax(policy.tables[ti]);
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      auto [ti, wi, li] = where[pi];
      DpoParams dp;
      dp.beta = beta;
      dp.policy_chosen = lp[ti][wi];
      dp.policy_rejected = lp[ti][li];
      dp.ref_chosen = ref_logprob[ti];
      dp.ref_rejected = ref_logprob[ti];
      total += dpo_loss(dp);
      if (margins_out) margins_out->push_back(dp.policy_chosen - dp.policy_rejected);
    }
    return total;
  };

  FitResult res;
  double initial_loss = margins_and_loss(&res.initial_margins);
  res.loss_history.push_back(initial_loss);

  for (int step = 0; step < steps; ++step) {
    std::vector<std::vector<double>> lp(policy.tables.size());
    std::vector<std::vector<double>> grad(policy.tables.size());
    for (std::size_t ti = 0; ti < policy.tables.size(); ++ti) {
      lp[ti] = logsoftmax(policy.tables[ti]);
      grad[ti].assign(policy.tables[ti].logits.size(), 0.0);
    }
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      auto [ti, wi, li] = where[pi];
      DpoParams dp;
      dp.beta = beta;
      dp.policy_chosen = lp[ti][wi];
      dp.policy_rejected = lp[ti][li];
      dp.ref_chosen = ref_logprob[ti];
      dp.ref_rejected = ref_logprob[ti];
      DpoGrad g = dpo_grad(dp);
      // chain rule through log-softmax: d logpi(y) / d logit_j = [j==y] - pi_j
      for (std::size_t j = 0; j < grad[ti].size(); ++j) {
        double pj = std::exp(lp[ti][j]);
        grad[ti][j] += g.d_policy_chosen * ((j == wi ? 1.0 : 0.0) - pj);
        grad[ti][j] += g.d_policy_rejected * ((j == li ? 1.0 : 0.0) - pj);
      }
    }
    for (std::size_t ti = 0; ti < policy.tables.size(); ++ti)
      for (std::size_t j = 0; j < grad[ti].size(); ++j)
        policy.tables[ti].logits[j] -= lr * grad[ti][j];

    double loss = margins_and_loss(nullptr);
    res.loss_history.push_back(loss);
    if (loss > 10.0 * initial_loss)
      throw Error(Err::Divergence,
                  "training diverged at step " + std::to_string(step + 1) + ": loss " +
                      util::fmt_sig(loss, 6) + " vs initial " +
                      util::fmt_sig(initial_loss, 6))
          .with("step", step + 1);
  }

  margins_and_loss(&res.final_margins);
  res.policy = std::move(policy);
  return res;
}

}  // namespace medtk::pref
