/*
* Copyright (C) 2026 The kdyn Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#ifndef KDYN_ERRORS_HPP
#define KDYN_ERRORS_HPP

#include <optional>
#include <stdexcept>
#include <string>

namespace kdyn
{

/// Base of every error the library raises. The CLI maps subclasses onto its
/// exit-code taxonomy, the service onto HTTP status codes.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a documented bound. `field()` names the offending field.
class ValidationError : public Error
{
public:
    ValidationError(std::string field, const std::string& detail)
        : Error(field.empty() ? detail : field + ": " + detail)
        , m_field(std::move(field))
        , m_detail(detail)
    {
    }

    const std::string& field() const
    {
        return m_field;
    }
    const std::string& detail() const
    {
        return m_detail;
    }

private:
    std::string m_field;
    std::string m_detail;
};

/// An operation was called outside its mathematical domain (e.g. K <= 0).
class DomainError : public Error
{
public:
    using Error::Error;
};

/// Not enough data to proceed (e.g. fewer than 12 joinable months).
class InsufficientDataError : public ValidationError
{
public:
    explicit InsufficientDataError(const std::string& detail)
        : ValidationError("", detail)
    {
    }
};

/// Numerical failure: non-finite values, step-size underflow, optimizer failure.
class NumericalError : public Error
{
public:
    explicit NumericalError(const std::string& what, std::optional<double> time = std::nullopt)
        : Error(what)
        , m_time(time)
    {
    }

    /// Simulation time (months) at which the failure occurred, if known.
    std::optional<double> time() const
    {
        return m_time;
    }

private:
    std::optional<double> m_time;
};

class StepSizeUnderflow : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

/// The integrated state left the physical domain by more than roundoff.
class DomainExit : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

class IoError : public Error
{
public:
    using Error::Error;
};

class NetworkError : public IoError
{
public:
    using IoError::IoError;
};

/// An upstream payload does not have the expected shape.
class SchemaError : public IoError
{
public:
    using IoError::IoError;
};

} // namespace kdyn

#endif // KDYN_ERRORS_HPP
