// Copyright 2026 The qrr Authors
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

namespace qrr {

/// Base class for every error raised by the library. `exit_code` is the
/// process status the command-line tool reports for this category.
class Error : public std::runtime_error {
   public:
    explicit Error(const std::string &what) : std::runtime_error(what) {
    }
    virtual int exit_code() const noexcept {
        return 1;
    }
};

/// A caller-supplied value violates an operation's precondition.
class ArgumentError : public Error {
   public:
    using Error::Error;
    int exit_code() const noexcept override {
        return 2;
    }
};

/// The request exceeds what an engine supports (qubit limits, brute force size).
class LimitError : public Error {
   public:
    using Error::Error;
    int exit_code() const noexcept override {
        return 3;
    }
};

/// Malformed input text or file contents.
class SchemaError : public Error {
   public:
    using Error::Error;
    int exit_code() const noexcept override {
        return 4;
    }
};

class IoError : public Error {
   public:
    using Error::Error;
};

/// A numerical routine could not produce a result (non-finite input,
/// indefinite matrix beyond tolerance).
class NumericalError : public Error {
   public:
    using Error::Error;
    int exit_code() const noexcept override {
        return 3;
    }
};

}  // namespace qrr
