/*
 *   Copyright 2026 The relquery Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace relquery {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value or schema does not conform to a column's statistical type.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed input file, version or fingerprint mismatch.
class StoreError : public Error {
public:
    using Error::Error;
};

/// Violated precondition on an inference or relevance operation.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Source position inside a BQL statement (1-based line and column).
struct SourcePos {
    std::size_t offset = 0;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Lexing or parsing failure, carrying the position and what was expected.
class ParseError : public Error {
public:
    ParseError(const std::string& message, SourcePos pos,
               std::vector<std::string> expected = {});

    const SourcePos& pos() const noexcept { return pos_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    SourcePos pos_;
    std::vector<std::string> expected_;
    std::string detail_;
};

/// Planning or evaluation failure of a well-formed statement.
class QueryError : public Error {
public:
    using Error::Error;
};

}  // namespace relquery
