#include "timebin/error.hpp"

namespace timebin {

void throw_invalid(const std::string& what) { throw InvalidArgument(what); }

}  // namespace timebin
