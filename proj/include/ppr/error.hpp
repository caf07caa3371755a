#ifndef PPR_ERROR_HPP
#define PPR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ppr {

/// Base class for all library errors. The message always starts with a
/// machine-parsable category tag, e.g. "UnknownValue: ...".
class Error : public std::runtime_error {
public:
    Error(const std::string& category, const std::string& message)
        : std::runtime_error(category + ": " + message), category_(category) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

} // namespace ppr

#endif
