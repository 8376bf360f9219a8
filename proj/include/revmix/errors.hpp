#pragma once

#include <stdexcept>
#include <string>

namespace revmix {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// diff handling
class MalformedDiff : public Error { public: using Error::Error; };
class SpanOutOfBounds : public Error { public: using Error::Error; };
class FileMismatch : public Error { public: using Error::Error; };
class BaseConflict : public Error { public: using Error::Error; };

// analyzer report ingestion
class MalformedReport : public Error { public: using Error::Error; };

// LLM gateway
class TransportError : public Error { public: using Error::Error; };
class TimeoutError : public Error { public: using Error::Error; };
class EmptyResponse : public Error { public: using Error::Error; };
class UnparseableJudgment : public Error { public: using Error::Error; };
class NonPermutation : public Error { public: using Error::Error; };

// dataset pipeline
class EmptyPool : public Error { public: using Error::Error; };
class EmptyClass : public Error { public: using Error::Error; };

// evaluation statistics
class LengthMismatch : public Error { public: using Error::Error; };
class EmptyInput : public Error { public: using Error::Error; };
class MissingKind : public Error { public: using Error::Error; };

// general
class InvalidInput : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class MissingInput : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

} // namespace revmix
