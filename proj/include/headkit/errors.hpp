/*
 * Copyright 2026 The headkit Authors
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

#include <stdexcept>
#include <string>

namespace headkit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/**
 * A document or in-memory structure failed validation. `field()` names the
 * offending field so callers can report it.
 */
class ValidationError : public Error
{
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field))
    {
    }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed input text (JSON, JSONL, PPM).
class ParseError : public ValidationError
{
public:
    using ValidationError::ValidationError;
};

/// Degenerate numeric input (e.g. a zero-length 6D rotation column).
class SingularInput : public Error
{
public:
    using Error::Error;
};

/// A point set with zero extent where a positive extent is required.
class DegenerateGeometry : public Error
{
public:
    using Error::Error;
};

/// A QA record lacks a field that a rule needs and no detector can fill it.
class IncompleteRecord : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace headkit
