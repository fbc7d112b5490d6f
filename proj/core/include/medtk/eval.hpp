// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_EVAL_HPP
#define MEDTK_EVAL_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "medtk/backend.hpp"
#include "medtk/prompts.hpp"

namespace medtk::eval {

struct EvalResult {
  std::string item_id;
  std::vector<double> candidate_logprobs;  // the scores selection used
  int chosen_index = -1;                   // argmax, lowest index on ties
  int gold_index = -1;
  bool correct = false;
  double chosen_prob = 0.0;  // softmax of candidate_logprobs at chosen_index
};

struct EvalFailure {
  std::string item_id;
  std::string error;  // "<code>: <message>"
};

struct EvalReport {
  std::string dataset;
  int shots = 0;
  std::size_t n_items = 0;  // scored items (= results.size())
  double accuracy = 0.0;
  std::vector<EvalResult> results;
  std::vector<EvalFailure> failures;  // only in partial-failure mode
};

std::vector<double> score_continuations(Backend& backend, const std::string& prompt,
                                        const std::vector<std::string>& candidates);

int select_answer(const std::vector<double>& logprobs);

// Softmax with max-subtraction; strictly positive, sums to 1 within 1e-9.
std::vector<double> option_probabilities(const std::vector<double>& logprobs);

struct EvalOptions {
  int shots = 0;
  std::uint64_t seed = 0;  // exemplar selection
  int max_concurrency = 1;
  bool partial_failures = false;  // record per-item errors instead of aborting
  bool length_normalize = false;  // divide scores by continuation byte length
  bool cot = false;
  const std::vector<corpus::QaItem>* exemplar_pool = nullptr;
  const prompts::PromptTemplate* exemplar_template = nullptr;
};

// Renders, scores, and selects every item. Results are ordered by input
// index whatever the completion order, so reports are byte-identical across
// concurrency settings.
EvalReport evaluate_dataset(Backend& backend,
                            const std::vector<corpus::QaItem>& items,
                            const prompts::PromptTemplate& tmpl,
                            const EvalOptions& opts);

struct UncertaintyReport {
  static constexpr int kBins = 10;  // equal width over [0, 1]
  std::array<std::int64_t, kBins> correct_hist{};
  std::array<std::int64_t, kBins> incorrect_hist{};
  std::optional<double> mean_correct;    // absent when no correct results
  std::optional<double> mean_incorrect;  // absent when no incorrect results
};

UncertaintyReport uncertainty_report(const std::vector<EvalResult>& results);

std::string report_to_csv(const EvalReport& report);
std::string report_to_markdown(const EvalReport& report);
std::string uncertainty_to_csv(const UncertaintyReport& report);
std::string uncertainty_to_markdown(const UncertaintyReport& report);

// Rebuilds results from the eval CSV (for the uncertainty subcommand).
std::vector<EvalResult> results_from_csv(const std::string& csv);

}  // namespace medtk::eval

#endif  // MEDTK_EVAL_HPP
