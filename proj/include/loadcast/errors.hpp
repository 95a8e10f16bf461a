#pragma once

#include <stdexcept>
#include <string>

namespace loadcast {

/// Base class for all loadcast errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ingestion / preprocessing
struct GapTooLarge : Error { using Error::Error; };
struct DuplicateTimestamp : Error { using Error::Error; };
struct NegativeReading : Error { using Error::Error; };
struct RangeTooShort : Error { using Error::Error; };
struct WindowTooShort : Error { using Error::Error; };
struct ZeroColumn : Error { using Error::Error; };

// solvers
struct RankDeficient : Error { using Error::Error; };
struct Underdetermined : Error { using Error::Error; };
struct TooFewRows : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// significance test
struct TooManyCandidates : Error { using Error::Error; };
struct MisalignedSeries : Error { using Error::Error; };
struct NonPositiveSigma : Error { using Error::Error; };
struct BadDof : Error { using Error::Error; };

// baselines
struct InsufficientHistory : Error { using Error::Error; };

// metrics
struct LengthMismatch : Error { using Error::Error; };
struct ZeroTrainMean : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct NonPositiveRss : Error { using Error::Error; };

// synthetic data / oracles
struct UnstableSpec : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };

// io / cli
struct SchemaError : Error { using Error::Error; };

}  // namespace loadcast
