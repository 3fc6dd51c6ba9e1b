// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pld {

/// Invalid argument values or inconsistent shapes.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs outside the mathematical domain of an operation (e.g. negative
/// Poisson intensities).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A caller broke an operation's precondition that is not a plain argument
/// check (non-scalar backward, underdetermined fits, non-linear denoisers
/// handed to linear-only checks).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A statistical estimator had nothing to estimate from.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values showed up in a numerical loop.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pld
