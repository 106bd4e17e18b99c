#pragma once

#include <stdexcept>
#include <string>

namespace hsmm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A distribution or model parameter is outside its valid range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the domain of a function (e.g. duration < 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A categorical draw was requested over weights with no mass.
class EmptySupport : public Error {
 public:
  using Error::Error;
};

/// The observations have zero probability under the model.
class ImpossibleEvidence : public Error {
 public:
  using Error::Error;
};

/// A conditional posterior has no support.
class DegeneratePosterior : public Error {
 public:
  using Error::Error;
};

/// A sampler reached a configuration it cannot move out of.
class DegenerateModel : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

}  // namespace hsmm
