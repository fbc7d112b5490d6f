// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/eval.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "medtk/error.hpp"
#include "medtk/util.hpp"

namespace medtk::eval {

std::vector<double> score_continuations(Backend& backend, const std::string& prompt,
                                        const std::vector<std::string>& candidates) {
  if (candidates.empty())
    throw Error(Err::EmptyCandidates, "no continuation candidates to score");
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      double s = backend.score(prompt, candidates[i]);
      if (!std::isfinite(s))
        throw Error(Err::BackendMalformedResponse, "non-finite score");
      scores.push_back(s);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (candidate " +
                                std::to_string(i) + ")")
          .with("candidate_index", static_cast<long long>(i));
    }
  }
  return scores;
}

int select_answer(const std::vector<double>& logprobs) {
  if (logprobs.empty()) throw Error(Err::EmptyScores, "no scores to select from");
  int best = 0;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    if (!std::isfinite(logprobs[i]))
      throw Error(Err::NonFiniteInput, "non-finite score at index " + std::to_string(i));
    if (logprobs[i] > logprobs[static_cast<std::size_t>(best)])
      best = static_cast<int>(i);
  }
  return best;
}

std::vector<double> option_probabilities(const std::vector<double>& logprobs) {
  if (logprobs.empty()) throw Error(Err::EmptyScores, "no scores to normalize");
  double maxv = logprobs[0];
  for (double v : logprobs) {
    if (!std::isfinite(v)) throw Error(Err::NonFiniteInput, "non-finite score");
    maxv = std::max(maxv, v);
  }
  std::vector<double> out(logprobs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    out[i] = std::exp(logprobs[i] - maxv);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

namespace {

EvalResult score_item(Backend& backend, const corpus::QaItem& item,
                      const prompts::PromptTemplate& tmpl,
                      const std::vector<corpus::QaItem>& exemplars,
                      const EvalOptions& opts) {
  prompts::RenderedPrompt rp =
      exemplars.empty() ? prompts::render_mcqa(item, tmpl)
                        : prompts::assemble_fewshot(item, exemplars, tmpl,
                                                    opts.exemplar_template);
  if (opts.cot) rp = prompts::apply_cot(rp);
  std::vector<double> scores = score_continuations(backend, rp.prompt_text, rp.candidates);
  if (opts.length_normalize)
    for (std::size_t i = 0; i < scores.size(); ++i)
      scores[i] /= static_cast<double>(std::max<std::size_t>(1, rp.candidates[i].size()));
  EvalResult r;
  r.item_id = item.id;
  r.candidate_logprobs = scores;
  r.chosen_index = select_answer(scores);
  r.gold_index = rp.gold_index.value_or(-1);
  r.correct = r.chosen_index == r.gold_index;
  r.chosen_prob =
      option_probabilities(scores)[static_cast<std::size_t>(r.chosen_index)];
  return r;
}

}  // namespace

EvalReport evaluate_dataset(Backend& backend,
                            const std::vector<corpus::QaItem>& items,
                            const prompts::PromptTemplate& tmpl,
                            const EvalOptions& opts) {
  if (items.empty()) throw Error(Err::EmptyResults, "no items to evaluate");
  if (opts.shots < 0) throw Error(Err::ConfigInvalid, "shots must be >= 0");
  if (opts.max_concurrency < 1)
    throw Error(Err::ConfigInvalid, "max_concurrency must be >= 1");

  std::vector<corpus::QaItem> exemplars;
  if (opts.shots > 0) {
    if (!opts.exemplar_pool || opts.exemplar_pool->empty())
      throw Error(Err::ConfigInvalid,
                  "few-shot evaluation needs a non-empty exemplar pool");
    exemplars = prompts::select_exemplars(
        *opts.exemplar_pool, static_cast<std::size_t>(opts.shots), opts.seed);
  }

  std::vector<std::optional<EvalResult>> slots(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      try {
        slots[i] = score_item(backend, items[i], tmpl, exemplars, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_threads = std::min<std::size_t>(
      static_cast<std::size_t>(opts.max_concurrency), items.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  report.dataset = prompts::dataset_name(tmpl.dataset);
  report.shots = opts.shots;
  std::size_t n_correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (errors[i]) {
      if (!opts.partial_failures) {
        try {
          std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
          throw Error(e.code(),
                      std::string(e.what()) + " (item " + items[i].id + ")")
              .with("item_id", items[i].id);
        }
      }
      std::string what;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const Error& e) {
        what = std::string(e.code_name()) + ": " + e.what();
      } catch (const std::exception& e) {
        what = std::string("Internal: ") + e.what();
      }
      report.failures.push_back({items[i].id, what});
      continue;
    }
    n_correct += slots[i]->correct;
    report.results.push_back(std::move(*slots[i]));
  }
  report.n_items = report.results.size();
  report.accuracy = report.n_items == 0
                        ? 0.0
                        : static_cast<double>(n_correct) /
                              static_cast<double>(report.n_items);
  return report;
}

UncertaintyReport uncertainty_report(const std::vector<EvalResult>& results) {
  if (results.empty()) throw Error(Err::EmptyResults, "no results to bin");
  UncertaintyReport r;
  double sum_correct = 0.0, sum_incorrect = 0.0;
  std::int64_t n_correct = 0, n_incorrect = 0;
  for (const auto& res : results) {
    int bin = static_cast<int>(res.chosen_prob * UncertaintyReport::kBins);
    bin = std::min(std::max(bin, 0), UncertaintyReport::kBins - 1);
    if (res.correct) {
      r.correct_hist[static_cast<std::size_t>(bin)] += 1;
      sum_correct += res.chosen_prob;
      ++n_correct;
    } else {
      r.incorrect_hist[static_cast<std::size_t>(bin)] += 1;
      sum_incorrect += res.chosen_prob;
      ++n_incorrect;
    }
  }
  if (n_correct > 0) r.mean_correct = sum_correct / static_cast<double>(n_correct);
  if (n_incorrect > 0)
    r.mean_incorrect = sum_incorrect / static_cast<double>(n_incorrect);
  return r;
}

std::string report_to_csv(const EvalReport& report) {
  std::string csv = "item_id,chosen,gold,correct,chosen_prob\n";
  for (const auto& r : report.results)
    csv += r.item_id + ',' + std::to_string(r.chosen_index) + ',' +
           std::to_string(r.gold_index) + ',' + (r.correct ? "true" : "false") +
           ',' + util::fmt_fixed(r.chosen_prob, 6) + '\n';
  return csv;
}

std::string report_to_markdown(const EvalReport& report) {
  std::string md = "| Dataset | Shots | Items | Failures | Accuracy |\n";
  md += "|---|---|---|---|---|\n";
  md += "| " + report.dataset + " | " + std::to_string(report.shots) + " | " +
        std::to_string(report.n_items) + " | " +
        std::to_string(report.failures.size()) + " | " +
        util::fmt_fixed(report.accuracy * 100.0, 1) + " |\n";
  return md;
}

std::string uncertainty_to_csv(const UncertaintyReport& report) {
  std::string csv = "bin_lo,bin_hi,correct,incorrect\n";
  for (int b = 0; b < UncertaintyReport::kBins; ++b)
    csv += util::fmt_fixed(0.1 * b, 1) + ',' + util::fmt_fixed(0.1 * (b + 1), 1) +
           ',' + std::to_string(report.correct_hist[static_cast<std::size_t>(b)]) +
           ',' +
           std::to_string(report.incorrect_hist[static_cast<std::size_t>(b)]) +
           '\n';
  return csv;
}

std::string uncertainty_to_markdown(const UncertaintyReport& report) {
  std::string md = "| bucket | mean chosen-option probability |\n|---|---|\n";
  md += "| correct | " +
        (report.mean_correct ? util::fmt_fixed(*report.mean_correct, 4)
                             : std::string("undefined")) +
        " |\n";
  md += "| incorrect | " +
        (report.mean_incorrect ? util::fmt_fixed(*report.mean_incorrect, 4)
                               : std::string("undefined")) +
        " |\n";
  return md;
}

std::vector<EvalResult> results_from_csv(const std::string& csv) {
  std::vector<EvalResult> out;
  std::istringstream in(csv);
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cols.size() != 5)
      throw Error(Err::MalformedRecord,
                  "line " + std::to_string(line_no) + ": expected 5 CSV columns")
          .with("line", static_cast<long long>(line_no));
    EvalResult r;
    r.item_id = cols[0];
    try {
      r.chosen_index = std::stoi(cols[1]);
      r.gold_index = std::stoi(cols[2]);
      r.chosen_prob = std::stod(cols[4]);
    } catch (const std::exception&) {
      throw Error(Err::MalformedRecord,
                  "line " + std::to_string(line_no) + ": bad numeric column")
          .with("line", static_cast<long long>(line_no));
    }
    if (cols[3] != "true" && cols[3] != "false")
      throw Error(Err::MalformedRecord,
                  "line " + std::to_string(line_no) + ": correct must be true/false")
          .with("line", static_cast<long long>(line_no));
    r.correct = cols[3] == "true";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace medtk::eval
