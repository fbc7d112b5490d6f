// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/contam.hpp"

#include <cstdint>
#include <thread>

#include "medtk/error.hpp"
#include "medtk/util.hpp"

namespace medtk::contam {

namespace {

// Decodes one UTF-8 codepoint at `i`, advancing it. Malformed sequences
// yield U+FFFD for the single offending byte.
std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0u) == 0x80u;
  };
  if (b0 < 0x80u) {
    i += 1;
    return b0;
  }
  if ((b0 & 0xE0u) == 0xC0u && cont(1)) {
    std::uint32_t cp = (b0 & 0x1Fu) << 6 |
                       (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0u) == 0xE0u && cont(1) && cont(2)) {
    std::uint32_t cp = (b0 & 0x0Fu) << 12 |
                       (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                       (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8u) == 0xF0u && cont(1) && cont(2) && cont(3)) {
    std::uint32_t cp = (b0 & 0x07u) << 18 |
                       (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                       (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                       (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
    i += 4;
    return cp;
  }
  i += 1;
  return 0xFFFDu;
}

void encode_utf8(std::uint32_t cp, std::string& out) {
  if (cp < 0x80u) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800u) {
    out.push_back(static_cast<char>(0xC0u | (cp >> 6)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  } else if (cp < 0x10000u) {
    out.push_back(static_cast<char>(0xE0u | (cp >> 12)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  } else {
    out.push_back(static_cast<char>(0xF0u | (cp >> 18)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 12) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  }
}

bool in_range(std::uint32_t cp, std::uint32_t lo, std::uint32_t hi) {
  return cp >= lo && cp <= hi;
}

// Returns the lowercased codepoint to keep, or 0 for a separator.
std::uint32_t classify(std::uint32_t cp) {
  if (cp < 0x80u) {
    if (cp >= 'a' && cp <= 'z') return cp;
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20u;
    if (cp >= '0' && cp <= '9') return cp;
    return 0;
  }
  if (cp <= 0xBFu) {  // C1 controls, NBSP, Latin-1 signs
    if (cp == 0xAAu || cp == 0xB5u || cp == 0xBAu) return cp;
    return 0;
  }
  if (cp <= 0xFFu) {  // Latin-1 letters
    if (cp == 0xD7u || cp == 0xF7u) return 0;
    if (cp <= 0xDEu) return cp + 0x20u;
    return cp;
  }
  if (in_range(cp, 0x0391u, 0x03A9u) && cp != 0x03A2u) return cp + 0x20u;  // Greek caps
  if (in_range(cp, 0x0400u, 0x040Fu)) return cp + 0x50u;  // Cyrillic caps w/ accents
  if (in_range(cp, 0x0410u, 0x042Fu)) return cp + 0x20u;  // Cyrillic caps
  if (in_range(cp, 0x2000u, 0x206Fu)) return 0;   // general punctuation
  if (in_range(cp, 0x20A0u, 0x20CFu)) return 0;   // currency
  if (in_range(cp, 0x2100u, 0x214Fu)) return 0;   // letterlike symbols
  if (in_range(cp, 0x2190u, 0x23FFu)) return 0;   // arrows, math, technical
  if (in_range(cp, 0x2500u, 0x27BFu)) return 0;   // boxes, shapes, dingbats
  if (in_range(cp, 0x2E00u, 0x2E7Fu)) return 0;   // supplemental punctuation
  if (in_range(cp, 0x3000u, 0x303Fu)) return 0;   // CJK symbols and punctuation
  if (in_range(cp, 0xFF01u, 0xFF0Fu) || in_range(cp, 0xFF1Au, 0xFF20u) ||
      in_range(cp, 0xFF3Bu, 0xFF40u) || in_range(cp, 0xFF5Bu, 0xFF65u))
    return 0;  // fullwidth punctuation
  if (cp == 0xFFFDu) return 0;
  return cp;
}

}  // namespace

std::vector<std::string> normalize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    std::uint32_t kept = classify(decode_utf8(text, i));
    if (kept == 0) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      encode_utf8(kept, current);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
  if (n < 1) throw Error(Err::InvalidNgramOrder, "n must be >= 1, got " + std::to_string(n));
  std::vector<std::string> out;
  if (tokens.size() < static_cast<std::size_t>(n)) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key += ' ';
      key += tokens[i + j];
    }
    out.push_back(std::move(key));
  }
  return out;
}

void NgramIndex::add_text(const std::string& text) {
  for (auto& g : ngrams(normalize(text), n)) grams.insert(std::move(g));
}

void NgramIndex::merge(NgramIndex&& other) {
  if (other.n != n)
    throw Error(Err::InvalidNgramOrder,
                "cannot merge order-" + std::to_string(other.n) + " into order-" +
                    std::to_string(n) + " index");
  for (auto it = other.grams.begin(); it != other.grams.end();)
    grams.insert(std::move(other.grams.extract(it++).value()));
}

NgramIndex NgramIndex::build(int n, const std::vector<std::string>& texts,
                             std::string source, unsigned threads) {
  if (n < 1) throw Error(Err::InvalidNgramOrder, "n must be >= 1, got " + std::to_string(n));
  NgramIndex index{n, std::move(source), {}};
  if (threads <= 1 || texts.size() < 2) {
    for (const auto& t : texts) index.add_text(t);
    return index;
  }
  unsigned shards = std::min<unsigned>(threads, static_cast<unsigned>(texts.size()));
  std::vector<NgramIndex> partial(shards);
  std::vector<std::thread> workers;
  for (unsigned s = 0; s < shards; ++s) {
    partial[s].n = n;
    workers.emplace_back([&, s] {
      for (std::size_t i = s; i < texts.size(); i += shards)
        partial[s].add_text(texts[i]);
    });
  }
  for (auto& w : workers) w.join();
  for (auto& p : partial) index.merge(std::move(p));
  return index;
}

OverlapReport overlap_ratio(const std::vector<std::string>& benchmark_texts,
                            const NgramIndex& train_index,
                            const std::string& benchmark_name) {
  std::unordered_set<std::string> bench_grams;
  for (const auto& t : benchmark_texts)
    for (auto& g : ngrams(normalize(t), train_index.n))
      bench_grams.insert(std::move(g));
  if (bench_grams.empty())
    throw Error(Err::EmptyBenchmarkNgrams,
                "benchmark \"" + benchmark_name + "\" yields no " +
                    std::to_string(train_index.n) + "-grams");
  std::int64_t matched = 0;
  for (const auto& g : bench_grams)
    if (train_index.contains(g)) ++matched;
  OverlapReport r;
  r.benchmark = benchmark_name;
  r.trainset = train_index.source;
  r.n = train_index.n;
  r.matched = matched;
  r.total = static_cast<std::int64_t>(bench_grams.size());
  r.ratio = static_cast<double>(matched) / static_cast<double>(r.total);
  return r;
}

OverlapReport overlap_ratio(const std::vector<std::string>& benchmark_texts,
                            const std::vector<std::string>& train_texts, int n,
                            const std::string& benchmark_name,
                            const std::string& trainset_name) {
  return overlap_ratio(benchmark_texts,
                       NgramIndex::build(n, train_texts, trainset_name),
                       benchmark_name);
}

std::string overlap_matrix_csv(const std::vector<NamedCorpus>& trainsets,
                               const std::vector<NamedCorpus>& benchmarks,
                               const std::vector<int>& orders,
                               unsigned threads) {
  std::string csv = "# overlap of distinct benchmark n-gram types, percent, n=";
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (i) csv += ',';
    csv += std::to_string(orders[i]);
  }
  csv += "\ntrainset";
  for (const auto& b : benchmarks) {
    csv += ',';
    csv += b.name;
  }
  csv += '\n';
  for (const auto& train : trainsets) {
    std::vector<NgramIndex> indexes;
    for (int n : orders)
      indexes.push_back(NgramIndex::build(n, train.texts, train.name, threads));
    csv += train.name;
    for (const auto& bench : benchmarks) {
      csv += ',';
      for (std::size_t k = 0; k < indexes.size(); ++k) {
        if (k) csv += " / ";
        csv += util::fmt_fixed(
            overlap_ratio(bench.texts, indexes[k], bench.name).ratio * 100.0, 2);
      }
    }
    csv += '\n';
  }
  return csv;
}

}  // namespace medtk::contam
