// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_CONTAM_HPP
#define MEDTK_CONTAM_HPP

#include <string>
#include <unordered_set>
#include <vector>

namespace medtk::contam {

// Lowercases and replaces punctuation/symbol characters with spaces, then
// splits on whitespace runs. ASCII and the common Latin-1/Greek/Cyrillic
// blocks get exact case folding; punctuation classes cover the ASCII set,
// Latin-1 signs, general punctuation, currency/math/arrow symbols, and CJK
// fullwidth punctuation. Codepoints outside those blocks pass through
// unchanged (CJK ideographs, Hangul, ...).
std::vector<std::string> normalize(const std::string& text);

// Space-joined windows of n consecutive tokens; empty when tokens.size() < n.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n);

struct NgramIndex {
  int n = 0;
  std::string source;
  std::unordered_set<std::string> grams;

  void add_text(const std::string& text);
  void merge(NgramIndex&& other);  // set union; orders must match
  bool contains(const std::string& key) const { return grams.count(key) > 0; }

  // shards the documents across `threads` workers, then unions the results
  static NgramIndex build(int n, const std::vector<std::string>& texts,
                          std::string source, unsigned threads = 1);
};

struct OverlapReport {
  std::string benchmark;
  std::string trainset;
  int n = 0;
  double ratio = 0.0;  // matched / total, over distinct benchmark gram types
  std::int64_t matched = 0;
  std::int64_t total = 0;
};

OverlapReport overlap_ratio(const std::vector<std::string>& benchmark_texts,
                            const NgramIndex& train_index,
                            const std::string& benchmark_name);
OverlapReport overlap_ratio(const std::vector<std::string>& benchmark_texts,
                            const std::vector<std::string>& train_texts, int n,
                            const std::string& benchmark_name = "benchmark",
                            const std::string& trainset_name = "train");

struct NamedCorpus {
  std::string name;
  std::vector<std::string> texts;
};

// Matrix CSV: one row per training set, one column per benchmark, each cell
// the ratios for every requested n as percentages ("1.85 / 0.37").
std::string overlap_matrix_csv(const std::vector<NamedCorpus>& trainsets,
                               const std::vector<NamedCorpus>& benchmarks,
                               const std::vector<int>& orders,
                               unsigned threads = 1);

}  // namespace medtk::contam

#endif  // MEDTK_CONTAM_HPP
