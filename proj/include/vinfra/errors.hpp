#pragma once

#include <stdexcept>

namespace vinfra {

class InfeasibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class ModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class SingularityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class ConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class SizeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class NotFoundError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class LengthError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class CapacityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class SchemaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace vinfra
