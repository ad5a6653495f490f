#ifndef INSCLR_ERROR_HPP
#define INSCLR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace insclr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define INSCLR_DEFINE_ERROR(Name)                  \
    class Name : public Error {                    \
    public:                                        \
        explicit Name(const std::string& what)     \
            : Error(std::string(#Name ": ") + what) {} \
    }

INSCLR_DEFINE_ERROR(DegenerateVector);
INSCLR_DEFINE_ERROR(DimensionMismatch);
INSCLR_DEFINE_ERROR(InvalidConfig);
INSCLR_DEFINE_ERROR(IndexOutOfRange);
INSCLR_DEFINE_ERROR(UnknownId);
INSCLR_DEFINE_ERROR(MissingView);
INSCLR_DEFINE_ERROR(EmptyQuerySet);
INSCLR_DEFINE_ERROR(InconsistentMining);
INSCLR_DEFINE_ERROR(PoolExhausted);
INSCLR_DEFINE_ERROR(InvalidInput);
INSCLR_DEFINE_ERROR(IoError);
INSCLR_DEFINE_ERROR(ParseError);
INSCLR_DEFINE_ERROR(ValidationError);

#undef INSCLR_DEFINE_ERROR

} // namespace insclr

#endif
