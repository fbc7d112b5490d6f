// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_PREF_HPP
#define MEDTK_PREF_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medtk::pref {

struct DialogueTriple {
  std::string id;
  std::string question;
  std::string answer1;
  std::string answer2;
  std::map<std::string, std::string> source_tags;
};

struct PreferencePair {
  std::string id;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  int judge_label = 0;  // 1 or 2
  std::map<std::string, int> human_labels;
};

// The pairwise judging instruction with its eleven quality axes.
// #question / #answer1 / #answer2 are the substitution points.
const std::string& judge_prompt_template();

std::string build_judge_prompt(const std::string& question,
                               const std::string& answer1,
                               const std::string& answer2);

// Verdict rule cascade: last standalone "1"/"2" token, then the last
// "Answer 1"/"Answer 2" phrase; anything else is unparseable.
int parse_judge_choice(const std::string& judge_text);

PreferencePair make_preference_pair(const DialogueTriple& triple, int judge_label,
                                    std::map<std::string, int> human_labels = {});

std::vector<DialogueTriple> triples_from_jsonl(const std::string& text);
std::string pairs_to_jsonl(const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> pairs_from_jsonl(const std::string& text);

struct AgreementReport {
  double kappa = 0.0;
  double observed_agreement = 0.0;
  double expected_agreement = 0.0;
  double accuracy = 0.0;  // = observed agreement for matched binary labels
  std::size_t n = 0;
};

AgreementReport agreement(const std::vector<int>& labels_a,
                          const std::vector<int>& labels_b);

std::string agreement_table(const AgreementReport& r);

struct DpoParams {
  double beta = 0.1;
  double policy_chosen = 0.0;    // log pi_theta(y_w | x)
  double policy_rejected = 0.0;  // log pi_theta(y_l | x)
  double ref_chosen = 0.0;       // log pi_ref(y_w | x)
  double ref_rejected = 0.0;     // log pi_ref(y_l | x)
};

// (policy margin) - (reference margin)
double dpo_delta(const DpoParams& p);

// softplus(-beta * delta); equals ln 2 at delta = 0
double dpo_loss(const DpoParams& p);

struct DpoGrad {
  double d_policy_chosen = 0.0;    // -beta * sigmoid(-beta * delta)
  double d_policy_rejected = 0.0;  // +beta * sigmoid(-beta * delta)
};

DpoGrad dpo_grad(const DpoParams& p);

// One softmax table per prompt over the responses seen for that prompt.
struct TabularPolicy {
  struct Table {
    std::string prompt;
    std::vector<std::string> responses;  // first-appearance order
    std::vector<double> logits;
  };
  std::vector<Table> tables;

  double logprob(const std::string& prompt, const std::string& response) const;
};

struct FitResult {
  TabularPolicy policy;
  std::vector<double> loss_history;     // total loss per step, plus final
  std::vector<double> initial_margins;  // logprob(chosen) - logprob(rejected)
  std::vector<double> final_margins;
};

// Full-batch gradient descent against a frozen uniform reference copy of the
// initial policy. Aborts with Divergence if the total loss exceeds 10x its
// initial value.
FitResult fit_toy_policy(const std::vector<PreferencePair>& pairs, int steps,
                         double lr, double beta);

}  // namespace medtk::pref

#endif  // MEDTK_PREF_HPP
