// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_ERROR_HPP
#define MEDTK_ERROR_HPP

#include <map>
#include <stdexcept>
#include <string>

namespace medtk {

// Every domain failure the library can raise. The CLI maps these to a
// single-line machine-parseable record on stderr and exit code 1.
enum class Err {
  // ingest / corpus
  MalformedRecord,
  UnknownSchema,
  IoError,
  // prompt rendering
  ChoiceCountMismatch,
  MissingContext,
  ContextMismatch,
  ExemplarMissingAnswer,
  CotAlreadyApplied,
  // scoring / evaluation
  EmptyCandidates,
  EmptyScores,
  EmptyResults,
  BackendUnreachable,
  BackendMalformedResponse,
  Timeout,
  FixtureMiss,
  GenerateUnsupported,
  // contamination
  EmptyBenchmarkNgrams,
  InvalidNgramOrder,
  // preference / DPO
  EmptyField,
  UnparseableVerdict,
  LengthMismatch,
  EmptyLabels,
  NonFiniteInput,
  Divergence,
  // influence
  EmptyCorpus,
  DimensionMismatch,
  NonPositiveLambda,
  MalformedGradientFile,
  // cli
  ConfigInvalid,
  UnknownSubcommand,
};

const char* err_name(Err code);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Err code() const { return code_; }
  const char* code_name() const { return err_name(code_); }

  // Attaches structured context (line number, item id, candidate index...)
  // carried through to the CLI error record.
  Error&& with(const std::string& key, const std::string& value) && {
    context_[key] = value;
    return std::move(*this);
  }
  Error&& with(const std::string& key, long long value) && {
    context_[key] = std::to_string(value);
    return std::move(*this);
  }

  const std::map<std::string, std::string>& context() const { return context_; }

 private:
  Err code_;
  std::map<std::string, std::string> context_;
};

}  // namespace medtk

#endif  // MEDTK_ERROR_HPP
