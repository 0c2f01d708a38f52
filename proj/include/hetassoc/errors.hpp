// Copyright 2026 The hetassoc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace hetassoc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration document (bad JSON, missing keys, wrong types).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed document that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Feasible state space larger than the configured ceiling.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Singular or inaccurate linear solve.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Arrival utility requested for a target state outside the feasible space.
class InfeasibleTargetError : public Error {
 public:
  using Error::Error;
};

// Conditional quantity requested on a load label with zero stationary mass.
class EmptyLabelError : public Error {
 public:
  using Error::Error;
};

// Policy space too large for the requested search mode.
class SearchCapError : public Error {
 public:
  using Error::Error;
};

}  // namespace hetassoc
