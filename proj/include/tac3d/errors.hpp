#pragma once

#include <stdexcept>
#include <string>

namespace tac3d {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// geometry
struct NoConvergence : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct BehindCamera : Error { using Error::Error; };
struct ParallelRays : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };

// elasticity / forcesolve
struct DegenerateElement : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct DegenerateAxis : Error { using Error::Error; };

// contact / friction
struct DegenerateNeighborhood : Error { using Error::Error; };
struct ZeroNormalForce : Error { using Error::Error; };
struct FrameMismatch : Error { using Error::Error; };

// simharness
struct ContactLost : Error {
    ContactLost(const std::string& msg, long frame) : Error(msg), frame_index(frame) {}
    long frame_index;
};

// io
struct IoFailure : Error { using Error::Error; };
struct ParseError : Error {
    ParseError(const std::string& msg, long line = -1) : Error(msg), line(line) {}
    long line;
};
struct VersionMismatch : Error { using Error::Error; };

}  // namespace tac3d
