#include "perfpred/error.hpp"

namespace perfpred {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::integrity: return "integrity error";
    case ErrorKind::range: return "range error";
    case ErrorKind::arity: return "arity error";
    case ErrorKind::size: return "size error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::backend: return "backend error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::config: return "config error";
    case ErrorKind::io: return "io error";
    case ErrorKind::undefined: return "undefined";
  }
  return "error";
}

}  // namespace perfpred
