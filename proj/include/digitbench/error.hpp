#pragma once

#include <stdexcept>
#include <string>

namespace digitbench {

// Every failure raised by the library derives from Error so callers can
// catch one type at the grid level and still branch on the category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };
class StateError     : public Error { public: using Error::Error; };
class ShapeError     : public Error { public: using Error::Error; };
class InputError     : public Error { public: using Error::Error; };
class SplitError     : public Error { public: using Error::Error; };
class IoError        : public Error { public: using Error::Error; };

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace digitbench
