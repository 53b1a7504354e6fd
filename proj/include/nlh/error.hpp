#pragma once

#include <stdexcept>
#include <string>

namespace nlh {

// Every precondition violation in the library surfaces as nlh::Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const char* what) {
    if (!ok) throw Error(what);
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw Error(what);
}

}  // namespace nlh
