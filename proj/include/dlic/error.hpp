#pragma once

#include <stdexcept>
#include <string>

namespace dlic {

// Base type for all engine errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad call arguments (empty grids, out-of-domain inputs, ...).
struct ArgumentError : Error {
  using Error::Error;
};

// Tensor / layer dimension mismatches.
struct ShapeError : Error {
  using Error::Error;
};

// Ill-formed quantizer parameters (non-positive scale, asymmetric per-channel, ...).
struct QuantizerError : Error {
  using Error::Error;
};

// Degenerate numeric configuration (constant calibration tensor, requant factor
// too large or too small to carry information).
struct DegenerateError : Error {
  using Error::Error;
};

// API contract violations (missing negative branch, coder misuse).
struct ContractError : Error {
  using Error::Error;
};

// Unreadable file: bad magic, unknown version, checksum mismatch.
struct FormatError : Error {
  using Error::Error;
};

// Structurally valid file whose payload is truncated or inconsistent,
// or a bitstream that cannot be decoded.
struct CorruptionError : Error {
  using Error::Error;
};

// Cross-configuration verification found diverging results.
struct DeterminismError : Error {
  using Error::Error;
};

}  // namespace dlic
