#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathcal {

// Index into a tokenizer vocabulary.
using TokenId = std::int32_t;

// Dense next-token score row, one entry per vocabulary item.
using LogitRow = std::vector<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PATHCAL_DEFINE_ERROR(Name)  \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  }

PATHCAL_DEFINE_ERROR(OverlapError);
PATHCAL_DEFINE_ERROR(EmptyCategoryError);
PATHCAL_DEFINE_ERROR(FormatError);
PATHCAL_DEFINE_ERROR(ConfigError);
PATHCAL_DEFINE_ERROR(BackendUnavailable);
PATHCAL_DEFINE_ERROR(ConnectionError);
PATHCAL_DEFINE_ERROR(TimeoutError);
PATHCAL_DEFINE_ERROR(NoPrefixFound);
PATHCAL_DEFINE_ERROR(ParseFailure);
PATHCAL_DEFINE_ERROR(EmptyInput);
PATHCAL_DEFINE_ERROR(MismatchedProblemSets);

#undef PATHCAL_DEFINE_ERROR

}  // namespace pathcal
