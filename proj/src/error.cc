#include "subregweigh/error.h"

namespace subregweigh {

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kEncoding: return "encoding error";
    case ErrorKind::kConsistency: return "consistency error";
    case ErrorKind::kUnknownSymbol: return "unknown symbol";
    case ErrorKind::kDegenerate: return "degenerate vector";
    case ErrorKind::kMissingPrediction: return "missing prediction";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kContract: return "contract violation";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

}  // namespace subregweigh
