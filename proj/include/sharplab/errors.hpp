#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sharplab {

// Mismatched vector/matrix dimensions between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A scalar or option argument outside its admissible range.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values fed into a numeric entry point.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A matrix or model whose shape rules out the requested operation.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A binary file whose magic/version does not match the expected format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two files or records that individually parse but disagree with each other.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A payload shorter than its own header promises.
class LengthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient encountered while training.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long step)
        : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

// theta never changes sign on the scanned grid; carries the observed values.
class NoCrossingError : public std::runtime_error {
public:
    NoCrossingError(const std::string& what, std::vector<double> thetas)
        : std::runtime_error(what), thetas_(std::move(thetas)) {}
    const std::vector<double>& thetas() const { return thetas_; }

private:
    std::vector<double> thetas_;
};

// Near-collinear basis vectors where a plane is required.
class DegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sharplab
