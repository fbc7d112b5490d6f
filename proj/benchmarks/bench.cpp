// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "medtk/contam.hpp"
#include "medtk/corpus.hpp"
#include "medtk/eval.hpp"
#include "medtk/influence.hpp"
#include "medtk/pref.hpp"

namespace {

std::vector<std::string> synthetic_docs(std::size_t count, std::size_t words,
                                        int vocab) {
  std::mt19937_64 rng(1234);
  std::vector<std::string> docs;
  docs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string d;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) d += ' ';
      d += "tok" + std::to_string(rng() % static_cast<std::uint64_t>(vocab));
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

void BM_CleanText(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 200; ++i)
    text += "some words  https://example.com/page?id=" + std::to_string(i) +
            "  more\n\n\ntext ";
  for (auto _ : state)
    benchmark::DoNotOptimize(medtk::corpus::clean_text(text));
}
BENCHMARK(BM_CleanText);

void BM_NgramIndexBuild(benchmark::State& state) {
  auto docs = synthetic_docs(static_cast<std::size_t>(state.range(0)), 200, 500);
  for (auto _ : state)
    benchmark::DoNotOptimize(medtk::contam::NgramIndex::build(3, docs, "bench"));
}
BENCHMARK(BM_NgramIndexBuild)->Arg(16)->Arg(128);

void BM_OverlapRatio(benchmark::State& state) {
  auto train = synthetic_docs(64, 200, 500);
  auto bench = synthetic_docs(8, 200, 500);
  auto index = medtk::contam::NgramIndex::build(3, train, "train");
  for (auto _ : state)
    benchmark::DoNotOptimize(medtk::contam::overlap_ratio(bench, index, "bench"));
}
BENCHMARK(BM_OverlapRatio);

void BM_TfidfFitAndTopK(benchmark::State& state) {
  auto texts = synthetic_docs(static_cast<std::size_t>(state.range(0)), 60, 800);
  std::vector<std::pair<std::string, std::string>> docs;
  for (std::size_t i = 0; i < texts.size(); ++i)
    docs.emplace_back("d" + std::to_string(i), texts[i]);
  for (auto _ : state) {
    auto model = medtk::influence::TfidfModel::fit(docs);
    benchmark::DoNotOptimize(
        medtk::influence::cosine_topk(model.vectors()[0], model.vectors(), 10));
  }
}
BENCHMARK(BM_TfidfFitAndTopK)->Arg(64)->Arg(256);

void BM_OptionProbabilities(benchmark::State& state) {
  std::vector<double> scores = {-1.2, -0.5, -3.0, -2.2, -0.9, -4.4};
  for (auto _ : state)
    benchmark::DoNotOptimize(medtk::eval::option_probabilities(scores));
}
BENCHMARK(BM_OptionProbabilities);

void BM_DpoGrad(benchmark::State& state) {
  medtk::pref::DpoParams p;
  p.beta = 0.1;
  p.policy_chosen = -1.1;
  p.policy_rejected = -2.3;
  p.ref_chosen = -1.4;
  p.ref_rejected = -1.9;
  for (auto _ : state) benchmark::DoNotOptimize(medtk::pref::dpo_grad(p));
}
BENCHMARK(BM_DpoGrad);

void BM_DatainfIhvp(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::size_t n = static_cast<std::size_t>(state.range(0)), d = 256;
  std::vector<std::vector<double>> grads(n, std::vector<double>(d));
  std::vector<double> v(d);
  for (auto& g : grads)
    for (auto& x : g) x = normal(rng);
  for (auto& x : v) x = normal(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(medtk::influence::datainf_ihvp(grads, v, 0.5));
}
BENCHMARK(BM_DatainfIhvp)->Arg(64)->Arg(1024);

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}
