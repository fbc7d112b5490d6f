// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "medtk/backend.hpp"

#include <sstream>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "medtk/error.hpp"
#include "medtk/util.hpp"

using nlohmann::json;

namespace medtk::eval {

BackendSpec BackendSpec::parse(const std::string& text, std::uint64_t seed) {
  BackendSpec spec;
  spec.seed = seed;
  if (text == "mock-hash") {
    spec.kind = Kind::MockHash;
    return spec;
  }
  if (text.rfind("mock-table:", 0) == 0) {
    spec.kind = Kind::MockTable;
    spec.fixture_path = text.substr(11);
    if (spec.fixture_path.empty())
      throw Error(Err::ConfigInvalid, "mock-table backend needs a fixture path");
    return spec;
  }
  if (text.rfind("http://", 0) == 0 || text.rfind("https://", 0) == 0) {
    spec.kind = Kind::Http;
    spec.endpoint = text;
    return spec;
  }
  throw Error(Err::ConfigInvalid, "unrecognized backend spec: " + text);
}

std::string Backend::generate(const std::string&) {
  throw Error(Err::GenerateUnsupported, "backend does not support generation");
}

double mock_hash_score(std::uint64_t seed, const std::string& prompt,
                       const std::string& continuation) {
  std::string key;
  key.reserve(8 + prompt.size() + 1 + continuation.size());
  for (int i = 0; i < 8; ++i)
    key.push_back(static_cast<char>((seed >> (8 * i)) & 0xFF));
  key += prompt;
  key.push_back('\x1f');
  key += continuation;
  std::uint64_t h = util::fnv1a64(key);
  // top 53 bits -> uniform double in [0, 1)
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return -10.0 * u;
}

namespace {

class MockHashBackend final : public Backend {
 public:
  explicit MockHashBackend(std::uint64_t seed) : seed_(seed) {}
  double score(const std::string& prompt, const std::string& continuation) override {
    return mock_hash_score(seed_, prompt, continuation);
  }

 private:
  std::uint64_t seed_;
};

class MockTableBackend final : public Backend {
 public:
  explicit MockTableBackend(const std::string& fixture_path) : path_(fixture_path) {
    std::istringstream in(util::read_file(fixture_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("prompt") || !j.contains("continuation") ||
          !j.contains("logprob_sum") || !j["logprob_sum"].is_number())
        throw Error(Err::MalformedRecord,
                    "fixture line " + std::to_string(line_no) +
                        ": expected {prompt, continuation, logprob_sum}")
            .with("line", static_cast<long long>(line_no));
      table_[key(j["prompt"], j["continuation"])] = j["logprob_sum"].get<double>();
    }
  }

  double score(const std::string& prompt, const std::string& continuation) override {
    auto it = table_.find(key(prompt, continuation));
    if (it == table_.end())
      throw Error(Err::FixtureMiss,
                  "fixture " + path_ + " has no entry for this (prompt, continuation)")
          .with("continuation", continuation);
    return it->second;
  }

 private:
  static std::string key(const std::string& p, const std::string& c) {
    return p + '\x1e' + c;
  }
  std::string path_;
  std::unordered_map<std::string, double> table_;
};

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(const BackendSpec& spec) : spec_(spec) {}

  double score(const std::string& prompt, const std::string& continuation) override {
    json body{{"prompt", prompt}, {"continuation", continuation}};
    json resp = post("/v1/score", body);
    if (!resp.contains("logprob_sum") || !resp["logprob_sum"].is_number())
      throw Error(Err::BackendMalformedResponse,
                  "response lacks numeric \"logprob_sum\"");
    return resp["logprob_sum"].get<double>();
  }

  std::string generate(const std::string& prompt) override {
    json resp = post("/v1/generate", json{{"prompt", prompt}});
    if (!resp.contains("text") || !resp["text"].is_string())
      throw Error(Err::BackendMalformedResponse, "response lacks string \"text\"");
    return resp["text"].get<std::string>();
  }

 private:
  json post(const std::string& route, const json& body) {
    // one client per call keeps this trivially thread-safe
    httplib::Client client(spec_.endpoint);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        spec_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    auto res = client.Post(route, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
        throw Error(Err::Timeout, "backend timed out: " + spec_.endpoint + route);
      throw Error(Err::BackendUnreachable,
                  "cannot reach backend: " + spec_.endpoint + route + " (" +
                      httplib::to_string(err) + ")");
    }
    if (res->status != 200)
      throw Error(Err::BackendUnreachable,
                  "backend returned HTTP " + std::to_string(res->status) + " for " +
                      route);
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
      throw Error(Err::BackendMalformedResponse, "response body is not a JSON object");
    return parsed;
  }

  BackendSpec spec_;
};

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  if (spec.max_concurrency < 1)
    throw Error(Err::ConfigInvalid, "max_concurrency must be >= 1");
  switch (spec.kind) {
    case BackendSpec::Kind::MockHash:
      return std::make_unique<MockHashBackend>(spec.seed);
    case BackendSpec::Kind::MockTable:
      return std::make_unique<MockTableBackend>(spec.fixture_path);
    case BackendSpec::Kind::Http:
      if (spec.endpoint.empty())
        throw Error(Err::ConfigInvalid, "http backend needs an endpoint");
      return std::make_unique<HttpBackend>(spec);
  }
  throw Error(Err::ConfigInvalid, "bad backend kind");
}

}  // namespace medtk::eval
