#include "marge/error.h"

namespace marge {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::InvalidEvent: return "InvalidEvent";
    case ErrorCode::OutOfOrderEvent: return "OutOfOrderEvent";
    case ErrorCode::UnknownBeacon: return "UnknownBeacon";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UnknownLanguage: return "UnknownLanguage";
    case ErrorCode::UnknownAdventure: return "UnknownAdventure";
    case ErrorCode::UnavailableAdventure: return "UnavailableAdventure";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::UnknownEgg: return "UnknownEgg";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::GateLocked: return "GateLocked";
    case ErrorCode::WrongInputKind: return "WrongInputKind";
    case ErrorCode::IncompleteQuiz: return "IncompleteQuiz";
    case ErrorCode::AlreadyAnswered: return "AlreadyAnswered";
    case ErrorCode::NotAQuizStage: return "NotAQuizStage";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyFeedback: return "EmptyFeedback";
    case ErrorCode::TooLong: return "TooLong";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::TransformFailed: return "TransformFailed";
    case ErrorCode::DuplicateLogin: return "DuplicateLogin";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::UnsupportedMediaType: return "UnsupportedMediaType";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::NotImplemented: return "NotImplemented";
    case ErrorCode::InvalidResponse: return "InvalidResponse";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

}  // namespace marge
