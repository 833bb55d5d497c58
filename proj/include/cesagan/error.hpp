#pragma once

#include "cesagan/config.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>

CESAGAN_NAMESPACE_BEGIN

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error { public: using Error::Error; };
class NotScalar : public Error { public: using Error::Error; };
class NoTape : public Error { public: using Error::Error; };
class UninitializedStats : public Error { public: using Error::Error; };
class NonFiniteInput : public Error { public: using Error::Error; };
class RaggedLines : public Error { public: using Error::Error; };
class InvalidLevel : public Error { public: using Error::Error; };
class DimensionMismatch : public Error { public: using Error::Error; };
class EmptyCorpus : public Error { public: using Error::Error; };
class MixedDimensions : public Error { public: using Error::Error; };
class EmptyInput : public Error { public: using Error::Error; };
class BadConfig : public Error { public: using Error::Error; };
class MissingCheckpoint : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

class UnknownSymbol : public Error {
public:
    UnknownSymbol(char symbol, std::size_t row, std::size_t col)
        : Error("unknown level symbol '" + std::string(1, symbol) + "' at row " + std::to_string(row) +
                ", col " + std::to_string(col)),
          symbol_(symbol), row_(row), col_(col) {}

    char symbol() const noexcept { return symbol_; }
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    char symbol_;
    std::size_t row_;
    std::size_t col_;
};

CESAGAN_NAMESPACE_END
