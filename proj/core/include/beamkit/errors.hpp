#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace beamkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid combination of parameters (e.g. non-COLA window/hop pair).
class ConfigError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// Argument outside its mathematical domain (e.g. shape p outside [0, 2]).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A division by zero or similar that a floor/loading should have prevented.
class NumericGuardError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Hermitian factorization failed at a given frequency bin.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(std::size_t bin, const std::string& what)
        : Error("singular matrix at bin " + std::to_string(bin) + ": " + what), bin_(bin) {}
    std::size_t bin() const noexcept { return bin_; }

private:
    std::size_t bin_;
};

/// A NaN/Inf appeared in an iterate.
class DivergedError : public Error {
public:
    DivergedError(std::size_t iteration, std::size_t bin)
        : Error("non-finite iterate at iteration " + std::to_string(iteration) + ", bin " +
                std::to_string(bin)),
          iteration_(iteration), bin_(bin) {}
    std::size_t iteration() const noexcept { return iteration_; }
    std::size_t bin() const noexcept { return bin_; }

private:
    std::size_t iteration_;
    std::size_t bin_;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class InfeasibleRt60Error : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Robustness ratio requested where it is not defined (no speech frames or zero speech PSD).
class UndefinedRatioError : public Error {
public:
    using Error::Error;
};

/// Metric could not be computed (zero reference, missing ground truth, zero denominator).
class MetricError : public Error {
public:
    using Error::Error;
};

}  // namespace beamkit
