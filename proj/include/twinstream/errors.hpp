#pragma once

#include <stdexcept>
#include <string>

namespace twinstream {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// udt_store
struct NonMonotonicTimestamp : Error { using Error::Error; };
struct UnknownAttribute : Error { using Error::Error; };
struct EmptyTrack : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct FormatVersionMismatch : Error { using Error::Error; };

// encoder
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct DivergedLoss : Error { using Error::Error; };

// grouping
struct TooFewUsers : Error { using Error::Error; };
struct BadK : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };

// abstraction
struct InvalidRecord : Error { using Error::Error; };
struct EmptyCatalog : Error { using Error::Error; };

// predictor
struct EmptyGroup : Error { using Error::Error; };
struct UnknownRepresentation : Error { using Error::Error; };
struct EmptyPlaylist : Error { using Error::Error; };

// config
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

}  // namespace twinstream
