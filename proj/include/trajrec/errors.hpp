#pragma once

#include <stdexcept>
#include <string>

namespace trajrec {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidCoordinate : Error { using Error::Error; };
struct DegenerateBearing : Error { using Error::Error; };
struct UnsupportedRegion : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct EmptyTrace : Error { using Error::Error; };
struct InfeasibleMask : Error { using Error::Error; };
struct FetchError : Error { using Error::Error; };
struct NoRoads : Error { using Error::Error; };
struct MatchInfeasible : Error { using Error::Error; };
struct PlanParseError : Error { using Error::Error; };
struct CoordParseError : Error { using Error::Error; };
struct ProviderError : Error { using Error::Error; };
struct EmptyResponse : Error { using Error::Error; };
struct DegenerateGroundTruth : Error { using Error::Error; };

}  // namespace trajrec
