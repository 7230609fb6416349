#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace herdtwin {

enum class ErrorCode {
  // core-model
  UnknownTreatmentCode,
  TimestampBeforeEpoch,
  InvalidValue,
  // ingest
  MissingFile,
  SchemaMismatch,
  EmptyDataset,
  Io,
  // aggregate
  EmptyInput,
  EmptySeries,
  MixedState,
  MixedCohort,
  // filter
  InvalidCutoff,
  InvalidLength,
  SeriesTooShort,
  GapInSeries,
  IncompleteDay,
  // fit
  MalformedParams,
  InsufficientPoints,
  SingularSystem,
  // lstm
  ShapeMismatch,
  NonFiniteLoss,
  UntrainedModel,
  InvalidConfig,
  // synth
  InvalidSpec,
  // twin
  UnknownKey,
  NoPriorPrediction,
  MissingPositiveControl,
  InsufficientTreatments,
  // cli
  Usage,
};

// Coarse grouping used by the command line tool to pick an exit status.
enum class ErrorCategory { Usage, Data, Numerical };

std::string_view error_code_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return error_category(code_); }

 private:
  ErrorCode code_;
};

}  // namespace herdtwin
