#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrpval {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class DegenerateCovariate : public Error {
public:
    using Error::Error;
};

class InfeasibleConstraint : public Error {
public:
    using Error::Error;
};

class CellMismatch : public Error {
public:
    using Error::Error;
};

class UnknownLevel : public Error {
public:
    using Error::Error;
};

class EmptySet : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class TailTooSmall : public Error {
public:
    using Error::Error;
};

class AllZeroWeights : public Error {
public:
    using Error::Error;
};

class BadPartition : public Error {
public:
    using Error::Error;
};

class MissingLevel : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

// A score needed data (a sample count or a truth value) for cells that lack it.
class UnobservedCell : public Error {
public:
    explicit UnobservedCell(std::vector<std::size_t> cells);
    const std::vector<std::size_t>& cells() const noexcept { return cells_; }

private:
    std::vector<std::size_t> cells_;
};

}  // namespace mrpval
