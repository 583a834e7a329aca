/*
 * Copyright 2026 The FPSA Toolchain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpsa {

// Every toolchain failure is an fpsa::Error; the subclass decides the CLI
// exit code (see pipeline.hpp).
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error
{
  public:
    using Error::Error;
};

class ValidationError : public Error
{
  public:
    ValidationError(std::string node, const std::string &what)
            : Error(node.empty() ? what : "node '" + node + "': " + what), node_(std::move(node))
    {
    }
    const std::string &node() const { return node_; }

  private:
    std::string node_;
};

class ConfigError : public Error
{
  public:
    using Error::Error;
};

class InfeasibleError : public Error
{
  public:
    using Error::Error;
};

class UnroutableError : public Error
{
  public:
    using Error::Error;
};

// floor(a / b) for b > 0, correct for negative a.
constexpr int64_t floor_div(int64_t a, int64_t b)
{
    int64_t q = a / b;
    return (a % b != 0 && a < 0) ? q - 1 : q;
}

constexpr int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

constexpr int64_t clamp_count(int64_t v, int64_t gamma) { return v < 0 ? 0 : (v > gamma ? gamma : v); }

// Collected non-fatal diagnostics (e.g. degenerate quantization scales).
struct Diagnostics
{
    std::vector<std::string> warnings;
    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

std::string version_string();

// FNV-1a over a byte string; used for config provenance hashes.
uint64_t fnv1a64(const std::string &bytes);
std::string hex64(uint64_t v);

} // namespace fpsa
