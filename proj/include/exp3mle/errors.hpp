#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exp3mle {

// Base for every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NonFiniteInput : public Error {
public:
    using Error::Error;
};

class ZeroProbabilityPull : public Error {
public:
    using Error::Error;
};

// Raised by simulate() when the arm drawn at step `step` has probability exactly 0.
class SimulationCollapse : public Error {
public:
    explicit SimulationCollapse(std::size_t step)
        : Error("simulation collapsed at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// Raised by replays when the observed arm at step `step` has probability exactly 0.
class ReplayCollapse : public Error {
public:
    explicit ReplayCollapse(std::size_t step)
        : Error("replay collapsed at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class BracketNotFound : public Error {
public:
    using Error::Error;
};

class AllNegInfinity : public Error {
public:
    using Error::Error;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

// File-system and parse failures. The CLI maps these to exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace exp3mle
