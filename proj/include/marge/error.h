#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace marge {

// Every failure the engine can signal. Names double as the machine-readable
// `code` field of API error bodies.
enum class ErrorCode {
  // beacon_protocol
  MalformedFrame,
  InvalidExponent,
  // proximity_engine
  InvalidEvent,
  OutOfOrderEvent,
  UnknownBeacon,
  EmptyWindow,
  // bus_simulator
  InvalidConfig,
  // adventure_engine
  ValidationError,
  UnknownLanguage,
  UnknownAdventure,
  UnavailableAdventure,
  UnknownSession,
  UnknownUser,
  UnknownEgg,
  SessionComplete,
  GateLocked,
  WrongInputKind,
  IncompleteQuiz,
  AlreadyAnswered,
  NotAQuizStage,
  IndexOutOfRange,
  EmptyFeedback,
  TooLong,
  // data_store
  InvalidPath,
  NotFound,
  TransformFailed,
  DuplicateLogin,
  // api_service
  BadRequest,
  UnsupportedMediaType,
  Unauthorized,
  Forbidden,
  NotImplemented,
  // evaluation_kit
  InvalidResponse,
  OutOfRange,
  EmptyInput,
};

inline constexpr ErrorCode kAllErrorCodes[] = {
    ErrorCode::MalformedFrame,   ErrorCode::InvalidExponent,
    ErrorCode::InvalidEvent,     ErrorCode::OutOfOrderEvent,
    ErrorCode::UnknownBeacon,    ErrorCode::EmptyWindow,
    ErrorCode::InvalidConfig,    ErrorCode::ValidationError,
    ErrorCode::UnknownLanguage,  ErrorCode::UnknownAdventure,
    ErrorCode::UnavailableAdventure, ErrorCode::UnknownSession,
    ErrorCode::UnknownUser,      ErrorCode::UnknownEgg,
    ErrorCode::SessionComplete,  ErrorCode::GateLocked,
    ErrorCode::WrongInputKind,   ErrorCode::IncompleteQuiz,
    ErrorCode::AlreadyAnswered,  ErrorCode::NotAQuizStage,
    ErrorCode::IndexOutOfRange,  ErrorCode::EmptyFeedback,
    ErrorCode::TooLong,          ErrorCode::InvalidPath,
    ErrorCode::NotFound,         ErrorCode::TransformFailed,
    ErrorCode::DuplicateLogin,   ErrorCode::BadRequest,
    ErrorCode::UnsupportedMediaType, ErrorCode::Unauthorized,
    ErrorCode::Forbidden,        ErrorCode::NotImplemented,
    ErrorCode::InvalidResponse,  ErrorCode::OutOfRange,
    ErrorCode::EmptyInput,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace marge
