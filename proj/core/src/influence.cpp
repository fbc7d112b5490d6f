// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/influence.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "medtk/contam.hpp"
#include "medtk/error.hpp"
#include "medtk/util.hpp"

using nlohmann::json;

namespace medtk::influence {

TfidfModel TfidfModel::fit(
    const std::vector<std::pair<std::string, std::string>>& docs) {
  if (docs.empty()) throw Error(Err::EmptyCorpus, "no documents to fit");
  TfidfModel m;
  std::map<std::string, std::size_t> df;
  std::vector<std::map<std::string, std::size_t>> tfs;
  tfs.reserve(docs.size());
  for (const auto& [id, text] : docs) {
    std::map<std::string, std::size_t> tf;
    for (const auto& tok : contam::normalize(text)) ++tf[tok];
    for (const auto& [term, _] : tf) ++df[term];
    tfs.push_back(std::move(tf));
  }
  double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df)
    m.idf_[term] = std::log(n / static_cast<double>(count));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    TfidfVector v;
    v.doc_id = docs[i].first;
    for (const auto& [term, tf] : tfs[i]) {
      double w = static_cast<double>(tf) * m.idf_.at(term);
      if (w > 0.0) v.weights[term] = w;
    }
    m.vectors_.push_back(std::move(v));
  }
  return m;
}

TfidfVector TfidfModel::transform(const std::string& doc_id,
                                  const std::string& text) const {
  TfidfVector v;
  v.doc_id = doc_id;
  std::map<std::string, std::size_t> tf;
  for (const auto& tok : contam::normalize(text)) ++tf[tok];
  for (const auto& [term, count] : tf) {
    double w = static_cast<double>(count) * idf(term);
    if (w > 0.0) v.weights[term] = w;
  }
  return v;
}

double TfidfModel::idf(const std::string& term) const {
  auto it = idf_.find(term);
  return it == idf_.end() ? 0.0 : it->second;
}

std::vector<TfidfVector> tfidf_fit_transform(
    const std::vector<std::pair<std::string, std::string>>& docs) {
  return TfidfModel::fit(docs).vectors();
}

double cosine(const TfidfVector& a, const TfidfVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [term, w] : a.weights) {
    na += w * w;
    auto it = b.weights.find(term);
    if (it != b.weights.end()) dot += w * it->second;
  }
  for (const auto& [_, w] : b.weights) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::pair<std::string, double>> cosine_topk(
    const TfidfVector& test_vec, const std::vector<TfidfVector>& train_vecs,
    std::size_t k) {
  if (k < 1) throw Error(Err::ConfigInvalid, "k must be >= 1");
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(train_vecs.size());
  for (const auto& tv : train_vecs) scored.emplace_back(tv.doc_id, cosine(test_vec, tv));
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class Cursor {
 public:
  Cursor(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  bool at_end() const { return pos_ == data_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 4;
    return v;
  }

  float f32() {
    std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }

  std::string bytes(std::size_t len) {
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

 private:
  void need(std::size_t len) {
    if (pos_ + len > data_.size())
      throw Error(Err::MalformedGradientFile,
                  "truncated gradient file: " + path_ + " at offset " +
                      std::to_string(pos_));
  }
  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_gradient_records(const std::string& path,
                            const std::vector<GradientRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    put_u32(out, static_cast<std::uint32_t>(r.example_id.size()));
    out += r.example_id;
    put_u32(out, static_cast<std::uint32_t>(r.layer_grads.size()));
    for (const auto& layer : r.layer_grads)
      put_u32(out, static_cast<std::uint32_t>(layer.size()));
    for (const auto& layer : r.layer_grads)
      for (float f : layer) put_f32(out, f);
  }
  util::write_file(path, out);
}

std::vector<GradientRecord> read_gradient_records(const std::string& path) {
  std::string data = util::read_file(path);
  Cursor cur(data, path);
  std::vector<GradientRecord> records;
  while (!cur.at_end()) {
    GradientRecord r;
    r.example_id = cur.bytes(cur.u32());
    std::uint32_t n_layers = cur.u32();
    std::vector<std::uint32_t> dims(n_layers);
    for (auto& d : dims) d = cur.u32();
    for (std::uint32_t d : dims) {
      std::vector<float> layer(d);
      for (auto& f : layer) f = cur.f32();
      r.layer_grads.push_back(std::move(layer));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::string gradients_to_jsonl(const std::vector<GradientRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json layers = json::array();
    for (const auto& layer : r.layer_grads) layers.push_back(layer);
    out += json{{"example_id", r.example_id}, {"layers", layers}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<GradientRecord> gradients_from_jsonl(const std::string& text) {
  std::vector<GradientRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("example_id") || !j.contains("layers") ||
        !j["layers"].is_array())
      throw Error(Err::MalformedGradientFile,
                  "line " + std::to_string(line_no) + ": bad gradient record")
          .with("line", static_cast<long long>(line_no));
    GradientRecord r;
    r.example_id = j["example_id"].get<std::string>();
    for (const auto& layer : j["layers"])
      r.layer_grads.push_back(layer.get<std::vector<float>>());
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<double> datainf_ihvp(const std::vector<std::vector<double>>& train_grads,
                                 const std::vector<double>& v, double lambda) {
  if (!(lambda > 0.0))
    throw Error(Err::NonPositiveLambda, "lambda must be > 0");
  if (train_grads.empty())
    throw Error(Err::DimensionMismatch, "need at least one training gradient");
  std::size_t d = v.size();
  std::vector<double> acc(d, 0.0);
  for (const auto& g : train_grads) {
    if (g.size() != d)
      throw Error(Err::DimensionMismatch,
                  "gradient dimension " + std::to_string(g.size()) +
                      " does not match vector dimension " + std::to_string(d));
    double dot = 0.0, norm2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dot += v[i] * g[i];
      norm2 += g[i] * g[i];
    }
    double coef = dot / (lambda + norm2);
    for (std::size_t i = 0; i < d; ++i) acc[i] += coef * g[i];
  }
  double n = static_cast<double>(train_grads.size());
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = (v[i] - acc[i] / n) / lambda;
  return out;
}

double default_lambda(const std::vector<std::vector<double>>& grads) {
  if (grads.empty() || grads[0].empty()) return 0.1;
  double mean_norm2 = 0.0;
  for (const auto& g : grads) {
    double norm2 = 0.0;
    for (double x : g) norm2 += x * x;
    mean_norm2 += norm2;
  }
  mean_norm2 /= static_cast<double>(grads.size());
  double lam = 0.1 * mean_norm2 / static_cast<double>(grads[0].size());
  return lam > 0.0 ? lam : 0.1;
}

namespace {

std::vector<double> to_double(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace

std::vector<InfluenceScore> influence_scores(
    const std::vector<GradientRecord>& train_records,
    const GradientRecord& test_record, std::vector<double> lambdas) {
  if (train_records.empty())
    throw Error(Err::EmptyCorpus, "no training gradient records");
  std::size_t n_layers = test_record.layer_grads.size();
  for (const auto& r : train_records) {
    if (r.layer_grads.size() != n_layers)
      throw Error(Err::DimensionMismatch,
                  "record " + r.example_id + " has " +
                      std::to_string(r.layer_grads.size()) + " layers, expected " +
                      std::to_string(n_layers));
    for (std::size_t l = 0; l < n_layers; ++l)
      if (r.layer_grads[l].size() != test_record.layer_grads[l].size())
        throw Error(Err::DimensionMismatch,
                    "record " + r.example_id + " layer " + std::to_string(l) +
                        " dimension differs from test record");
  }
  // per-layer train gradients in double precision
  std::vector<std::vector<std::vector<double>>> layer_grads(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l)
    for (const auto& r : train_records)
      layer_grads[l].push_back(to_double(r.layer_grads[l]));

  if (lambdas.empty())
    for (std::size_t l = 0; l < n_layers; ++l)
      lambdas.push_back(default_lambda(layer_grads[l]));
  if (lambdas.size() != n_layers)
    throw Error(Err::DimensionMismatch,
                "got " + std::to_string(lambdas.size()) + " lambdas for " +
                    std::to_string(n_layers) + " layers");
  for (double lam : lambdas)
    if (!(lam > 0.0)) throw Error(Err::NonPositiveLambda, "lambda must be > 0");

  std::vector<std::vector<double>> ihvp(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l)
    ihvp[l] = datainf_ihvp(layer_grads[l], to_double(test_record.layer_grads[l]),
                           lambdas[l]);

  std::vector<InfluenceScore> scores;
  scores.reserve(train_records.size());
  for (std::size_t i = 0; i < train_records.size(); ++i) {
    double s = 0.0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto& gi = layer_grads[l][i];
      for (std::size_t j = 0; j < gi.size(); ++j) s += ihvp[l][j] * gi[j];
    }
    scores.push_back({train_records[i].example_id, test_record.example_id, s, lambdas});
  }
  return scores;
}

std::string scores_to_csv(std::vector<InfluenceScore> scores) {
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.train_id < b.train_id;
  });
  std::string csv;
  if (!scores.empty()) {
    csv += "# lambda=";
    for (std::size_t l = 0; l < scores[0].lambdas.size(); ++l) {
      if (l) csv += ',';
      csv += util::fmt_sig(scores[0].lambdas[l], 12);
    }
    csv += '\n';
  }
  csv += "train_id,test_id,score,rank\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    csv += scores[i].train_id + ',' + scores[i].test_id + ',' +
           util::fmt_sig(scores[i].score, 12) + ',' + std::to_string(i + 1) + '\n';
  return csv;
}

}  // namespace medtk::influence
