// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_BACKEND_HPP
#define MEDTK_BACKEND_HPP

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

namespace medtk::eval {

struct BackendSpec {
  enum class Kind { Http, MockTable, MockHash };

  Kind kind = Kind::MockHash;
  std::string endpoint;      // http: full URL, e.g. http://127.0.0.1:8080
  std::string fixture_path;  // mock-table
  std::uint64_t seed = 0;    // mock-hash
  std::chrono::milliseconds timeout{5000};
  int max_concurrency = 1;

  // "mock-hash", "mock-table:<path>", or "http://host:port"
  static BackendSpec parse(const std::string& text, std::uint64_t seed = 0);
};

// Scoring (and, for judge use, generation) abstracted away from the harness.
// Implementations are safe to call from multiple threads.
class Backend {
 public:
  virtual ~Backend() = default;

  // Summed log-probability of `continuation` given `prompt`.
  virtual double score(const std::string& prompt,
                       const std::string& continuation) = 0;

  // Free-text completion; only the http backend supports this.
  virtual std::string generate(const std::string& prompt);
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

// Deterministic score a mock-hash backend assigns to (prompt, continuation):
// FNV-1a of seed and both strings, mapped into [-10, 0].
double mock_hash_score(std::uint64_t seed, const std::string& prompt,
                       const std::string& continuation);

}  // namespace medtk::eval

#endif  // MEDTK_BACKEND_HPP
