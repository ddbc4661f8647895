#pragma once

#include <stdexcept>
#include <string>

namespace cvc {

// Base class for everything this library throws on contract violations.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct NotALabel : Error {
    using Error::Error;
};
struct UnknownToken : Error {
    using Error::Error;
};
struct InvalidConfig : Error {
    using Error::Error;
};
struct EmptyDataset : Error {
    using Error::Error;
};
struct EmptyFeatureSequence : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct EmptyCorpus : Error {
    using Error::Error;
};
struct DegenerateCorpus : Error {
    using Error::Error;
};
struct ZeroLengthCandidate : Error {
    using Error::Error;
};
struct InsufficientRecords : Error {
    using Error::Error;
};
struct CorruptFile : Error {
    using Error::Error;
};
struct IoFailure : Error {
    using Error::Error;
};
struct NonFiniteLoss : Error {
    using Error::Error;
};
struct IncompatibleCheckpoint : Error {
    using Error::Error;
};

} // namespace cvc
