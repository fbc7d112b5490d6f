// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/util.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "medtk/error.hpp"

namespace medtk {

const char* err_name(Err code) {
  switch (code) {
    case Err::MalformedRecord: return "MalformedRecord";
    case Err::UnknownSchema: return "UnknownSchema";
    case Err::IoError: return "IoError";
    case Err::ChoiceCountMismatch: return "ChoiceCountMismatch";
    case Err::MissingContext: return "MissingContext";
    case Err::ContextMismatch: return "ContextMismatch";
    case Err::ExemplarMissingAnswer: return "ExemplarMissingAnswer";
    case Err::CotAlreadyApplied: return "CotAlreadyApplied";
    case Err::EmptyCandidates: return "EmptyCandidates";
    case Err::EmptyScores: return "EmptyScores";
    case Err::EmptyResults: return "EmptyResults";
    case Err::BackendUnreachable: return "BackendUnreachable";
    case Err::BackendMalformedResponse: return "BackendMalformedResponse";
    case Err::Timeout: return "Timeout";
    case Err::FixtureMiss: return "FixtureMiss";
    case Err::GenerateUnsupported: return "GenerateUnsupported";
    case Err::EmptyBenchmarkNgrams: return "EmptyBenchmarkNgrams";
    case Err::InvalidNgramOrder: return "InvalidNgramOrder";
    case Err::EmptyField: return "EmptyField";
    case Err::UnparseableVerdict: return "UnparseableVerdict";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::EmptyLabels: return "EmptyLabels";
    case Err::NonFiniteInput: return "NonFiniteInput";
    case Err::Divergence: return "Divergence";
    case Err::EmptyCorpus: return "EmptyCorpus";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::NonPositiveLambda: return "NonPositiveLambda";
    case Err::MalformedGradientFile: return "MalformedGradientFile";
    case Err::ConfigInvalid: return "ConfigInvalid";
    case Err::UnknownSubcommand: return "UnknownSubcommand";
  }
  return "Unknown";
}

}  // namespace medtk

namespace medtk::util {

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string file_digest_hex(const std::string& path) {
  return fnv1a64_hex(read_file(path));
}

std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string fmt_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

void seeded_shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto bounded = [&rng](std::uint64_t n) {
    // rejection sampling keeps the draw unbiased and identical everywhere
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = rng();
    } while (x >= limit);
    return x % n;
  };
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::IoError, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::IoError, "cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Err::IoError, "short write: " + path);
}

}  // namespace medtk::util
