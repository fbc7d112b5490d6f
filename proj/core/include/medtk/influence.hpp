// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_INFLUENCE_HPP
#define MEDTK_INFLUENCE_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace medtk::influence {

struct TfidfVector {
  std::string doc_id;
  std::map<std::string, double> weights;  // term -> tf * idf, zeros dropped
};

// tf = raw term count, idf = ln(N / df), tokenization shared with the
// contamination normalizer.
class TfidfModel {
 public:
  static TfidfModel fit(const std::vector<std::pair<std::string, std::string>>& docs);

  TfidfVector transform(const std::string& doc_id, const std::string& text) const;
  const std::vector<TfidfVector>& vectors() const { return vectors_; }
  double idf(const std::string& term) const;  // 0 for unseen terms

 private:
  std::map<std::string, double> idf_;
  std::vector<TfidfVector> vectors_;
};

std::vector<TfidfVector> tfidf_fit_transform(
    const std::vector<std::pair<std::string, std::string>>& docs);

double cosine(const TfidfVector& a, const TfidfVector& b);

// Top-k train documents by cosine similarity, descending; equal similarities
// order by train id. Asking for more than exists returns everything.
std::vector<std::pair<std::string, double>> cosine_topk(
    const TfidfVector& test_vec, const std::vector<TfidfVector>& train_vecs,
    std::size_t k);

struct GradientRecord {
  std::string example_id;
  std::vector<std::vector<float>> layer_grads;
};

// Framed binary stream, one frame per record:
//   u32 id_len | id bytes | u32 n_layers | u32 dims[n_layers] | f32 payloads
// all little-endian.
void write_gradient_records(const std::string& path,
                            const std::vector<GradientRecord>& records);
std::vector<GradientRecord> read_gradient_records(const std::string& path);

// JSONL debug form: {"example_id": ..., "layers": [[...], ...]}
std::string gradients_to_jsonl(const std::vector<GradientRecord>& records);
std::vector<GradientRecord> gradients_from_jsonl(const std::string& text);

// Closed-form per-sample approximation of (lambda I + (1/n) sum g g^T)^{-1} v:
//   (1/lambda) * (v - (1/n) sum_j [(v . g_j) / (lambda + |g_j|^2)] g_j)
// Exact for n = 1 by the Sherman-Morrison identity.
std::vector<double> datainf_ihvp(const std::vector<std::vector<double>>& train_grads,
                                 const std::vector<double>& v, double lambda);

// 0.1 * mean(|g_j|^2) / d; falls back to 0.1 when every gradient is zero.
double default_lambda(const std::vector<std::vector<double>>& grads);

struct InfluenceScore {
  std::string train_id;
  std::string test_id;
  double score = 0.0;  // positive: removing this example should raise test loss
  std::vector<double> lambdas;  // per-layer damping used
};

// score(i) = sum over layers of < ihvp(test grad), train grad_i >.
// Empty `lambdas` selects the per-layer default heuristic.
std::vector<InfluenceScore> influence_scores(
    const std::vector<GradientRecord>& train_records,
    const GradientRecord& test_record, std::vector<double> lambdas = {});

// CSV in rank order (descending score, ties by train id):
// train_id,test_id,score,rank
std::string scores_to_csv(std::vector<InfluenceScore> scores);

}  // namespace medtk::influence

#endif  // MEDTK_INFLUENCE_HPP
