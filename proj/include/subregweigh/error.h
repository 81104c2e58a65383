#ifndef SUBREGWEIGH_ERROR_H_
#define SUBREGWEIGH_ERROR_H_

#include <stdexcept>
#include <string>

namespace subregweigh {

enum class ErrorKind {
  kParse,         // malformed input line
  kFormat,        // well-formed line with an invalid value (bad tag, dup key)
  kEncoding,      // invalid UTF-8
  kConsistency,   // cross-file or cross-structure mismatch
  kUnknownSymbol, // character outside the BPE alphabet
  kDegenerate,    // zero-norm vector
  kMissingPrediction,
  kShape,
  kContract,      // violated precondition
  kTraining,
  kIo,
};

const char *ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Error carrying the 1-based input line it was raised at.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, int line, const std::string &message)
      : Error(kind, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace subregweigh

#endif  // SUBREGWEIGH_ERROR_H_
