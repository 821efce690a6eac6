#ifndef MOMENTLIMIT_ERROR_HPP
#define MOMENTLIMIT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace momentlimit
{

enum class errc
{
    missing_coordinate,
    degree_exceeded,
    missing_moment,
    outside_subalgebra,
    unknown_variable,
    not_flat,
    ill_conditioned,
    not_a_subset,
    missing_subset,
    exactness_violation,
    not_directed,
    base_not_covered,
    unsupported_predicate,
    schedule_incomplete,
    nonpositive_moment,
    invalid_argument,
    parse_error,
};

inline std::string_view to_string(errc code)
{
    switch (code)
    {
    case errc::missing_coordinate: return "missing-coordinate";
    case errc::degree_exceeded: return "degree-exceeded";
    case errc::missing_moment: return "missing-moment";
    case errc::outside_subalgebra: return "outside-subalgebra";
    case errc::unknown_variable: return "unknown-variable";
    case errc::not_flat: return "not-flat";
    case errc::ill_conditioned: return "ill-conditioned";
    case errc::not_a_subset: return "not-a-subset";
    case errc::missing_subset: return "missing-subset";
    case errc::exactness_violation: return "exactness-violation";
    case errc::not_directed: return "not-directed";
    case errc::base_not_covered: return "base-not-covered";
    case errc::unsupported_predicate: return "unsupported-predicate";
    case errc::schedule_incomplete: return "schedule-incomplete";
    case errc::nonpositive_moment: return "nonpositive-moment";
    case errc::invalid_argument: return "invalid-argument";
    case errc::parse_error: return "parse-error";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class error : public std::runtime_error
{
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what),
          code_(code)
    {
    }

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace momentlimit

#endif
