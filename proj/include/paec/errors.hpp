#pragma once

#include <stdexcept>
#include <string>

namespace paec {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParamError : Error { using Error::Error; };       // bad argument / config value
struct ShapeError : Error { using Error::Error; };       // mismatched dimensions
struct RateError : Error { using Error::Error; };        // unsupported sample rate
struct EnergyError : Error { using Error::Error; };      // degenerate (zero) energy
struct DurationError : Error { using Error::Error; };    // input too short / empty
struct GeometryError : Error { using Error::Error; };    // positions outside the room
struct CorpusError : Error { using Error::Error; };      // missing speaker / utterance
struct ProviderError : Error { using Error::Error; };    // embedding provider failure
struct ConditioningError : Error { using Error::Error; };// missing speaker conditioning
struct ConfigError : Error { using Error::Error; };      // invalid experiment config
struct IoError : Error { using Error::Error; };          // file parse / write failure
struct TargetError : Error { using Error::Error; };      // missing loss target component
struct StrategyError : Error { using Error::Error; };    // missing checkpoint for strategy

} // namespace paec
