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
#include "relquery/errors.hpp"

namespace relquery {

namespace {

std::string render(const std::string& message, const SourcePos& pos, const std::vector<std::string>& expected) {
    std::string out = "line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column) + ": " + message;
    if (!expected.empty()) {
        out += " (expected ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i > 0) out += i + 1 == expected.size() ? " or " : ", ";
            out += expected[i];
        }
        out += ")";
    }
    return out;
}

}  // namespace

ParseError::ParseError(const std::string& message, SourcePos pos, std::vector<std::string> expected)
    : Error(render(message, pos, expected)), pos_(pos), expected_(std::move(expected)), detail_(message) {}

}  // namespace relquery
