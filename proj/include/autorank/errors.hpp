#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace autorank {

enum class Errc {
  // ingest
  InvalidField,
  InvalidEncoding,
  MalformedRow,
  NonFiniteScore,
  DuplicateKey,
  DuplicateSystem,
  UnknownBoolean,
  MissingRule,
  LowResourceMetricCount,
  DuplicateLangPair,
  DuplicateMetric,
  ExcludedMetricInPolicy,
  // aggregate
  MixedGranularity,
  EmptySegmentSet,
  // autorank
  EmptyInput,
  SystemSetMismatch,
  PolicyMetricMissing,
  UnknownLangPair,
  // select
  MissingMeta,
  InvalidArgument,
  // analyze
  LengthMismatch,
  DegenerateVariance,
  NoSharedSegments,
  // cli
  Io,
  Validation,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidField: return "InvalidField";
    case Errc::InvalidEncoding: return "InvalidEncoding";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::NonFiniteScore: return "NonFiniteScore";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::DuplicateSystem: return "DuplicateSystem";
    case Errc::UnknownBoolean: return "UnknownBoolean";
    case Errc::MissingRule: return "MissingRule";
    case Errc::LowResourceMetricCount: return "LowResourceMetricCount";
    case Errc::DuplicateLangPair: return "DuplicateLangPair";
    case Errc::DuplicateMetric: return "DuplicateMetric";
    case Errc::ExcludedMetricInPolicy: return "ExcludedMetricInPolicy";
    case Errc::MixedGranularity: return "MixedGranularity";
    case Errc::EmptySegmentSet: return "EmptySegmentSet";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::SystemSetMismatch: return "SystemSetMismatch";
    case Errc::PolicyMetricMissing: return "PolicyMetricMissing";
    case Errc::UnknownLangPair: return "UnknownLangPair";
    case Errc::MissingMeta: return "MissingMeta";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::NoSharedSegments: return "NoSharedSegments";
    case Errc::Io: return "Io";
    case Errc::Validation: return "Validation";
  }
  return "Unknown";
}

// True for failures that stem from reading, decoding or invoking, as opposed
// to well-formed input that cannot be ranked. The CLI maps these to exit 1.
constexpr bool is_parse_error(Errc code) {
  switch (code) {
    case Errc::InvalidField:
    case Errc::InvalidEncoding:
    case Errc::MalformedRow:
    case Errc::NonFiniteScore:
    case Errc::DuplicateKey:
    case Errc::DuplicateSystem:
    case Errc::UnknownBoolean:
    case Errc::MissingRule:
    case Errc::LowResourceMetricCount:
    case Errc::DuplicateLangPair:
    case Errc::DuplicateMetric:
    case Errc::ExcludedMetricInPolicy:
    case Errc::InvalidArgument:
    case Errc::Io:
      return true;
    default:
      return false;
  }
}

// Every failure in the library is reported as an Error. `subject` names the
// offending field, key, system or metric; `line` is 1-based when known.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, std::string message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(compose(code, subject, message, line)),
        code_(code),
        subject_(std::move(subject)),
        line_(line) {}

  Errc code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  static std::string compose(Errc code, const std::string& subject,
                             const std::string& message,
                             std::optional<std::size_t> line) {
    std::string out(to_string(code));
    if (line) out += " (line " + std::to_string(*line) + ")";
    if (!subject.empty()) out += " [" + subject + "]";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  Errc code_;
  std::string subject_;
  std::optional<std::size_t> line_;
};

}  // namespace autorank
