#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synchrolab {

enum class Errc {
  // dataset
  EmptyFile,
  MalformedRow,
  RateMismatch,
  OutOfRange,
  // preprocess / decompose
  CutoffAboveNyquist,
  SignalTooShort,
  AllFlagged,
  DegenerateRange,
  // synchrony
  LengthMismatch,
  ConstantInput,
  EmptyInput,
  InfeasibleBand,
  EmptyCohort,
  // stats
  SampleTooSmall,
  SampleTooLarge,
  DegenerateDesign,
  ZeroVariance,
  IncompleteDesign,
  OutOfRangeP,
  ZeroPooledSD,
  // vizmap
  InputOutOfUnitRange,
  // plumbing
  InvalidArgument,
  Io,
  Manifest,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::RateMismatch: return "RateMismatch";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::CutoffAboveNyquist: return "CutoffAboveNyquist";
    case Errc::SignalTooShort: return "SignalTooShort";
    case Errc::AllFlagged: return "AllFlagged";
    case Errc::DegenerateRange: return "DegenerateRange";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ConstantInput: return "ConstantInput";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InfeasibleBand: return "InfeasibleBand";
    case Errc::EmptyCohort: return "EmptyCohort";
    case Errc::SampleTooSmall: return "SampleTooSmall";
    case Errc::SampleTooLarge: return "SampleTooLarge";
    case Errc::DegenerateDesign: return "DegenerateDesign";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::IncompleteDesign: return "IncompleteDesign";
    case Errc::OutOfRangeP: return "OutOfRangeP";
    case Errc::ZeroPooledSD: return "ZeroPooledSD";
    case Errc::InputOutOfUnitRange: return "InputOutOfUnitRange";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::Manifest: return "Manifest";
  }
  return "Unknown";
}

// Process exit code for an error category: 2 manifest, 3 data, 4 numeric.
constexpr int exit_code(Errc c) {
  switch (c) {
    case Errc::Manifest:
    case Errc::InvalidArgument:
      return 2;
    case Errc::EmptyFile:
    case Errc::MalformedRow:
    case Errc::RateMismatch:
    case Errc::OutOfRange:
    case Errc::Io:
    case Errc::EmptyCohort:
    case Errc::LengthMismatch:
    case Errc::EmptyInput:
    case Errc::IncompleteDesign:
    case Errc::SignalTooShort:
      return 3;
    default:
      return 4;
  }
}

/// Exception carrying a module-qualified error code, e.g. "preprocess.DegenerateRange".
class Error : public std::runtime_error {
 public:
  Error(std::string_view module, Errc code, const std::string& what)
      : std::runtime_error(what), module_(module), code_(code) {}

  Errc code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  std::string qualified_code() const { return module_ + "." + std::string(errc_name(code_)); }

 private:
  std::string module_;
  Errc code_;
};

/// Row-level ingestion failure; `row()` is the zero-based data row index.
class MalformedRowError : public Error {
 public:
  MalformedRowError(std::size_t row, const std::string& what)
      : Error("dataset", Errc::MalformedRow, what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace synchrolab
