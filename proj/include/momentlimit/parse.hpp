#ifndef MOMENTLIMIT_PARSE_HPP
#define MOMENTLIMIT_PARSE_HPP

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include "algebra.hpp"

namespace momentlimit
{

namespace detail
{

class PolynomialParser
{
public:
    explicit PolynomialParser(std::string_view text)
    {
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) src_.push_back(c);
    }

    Polynomial parse()
    {
        if (src_.empty()) fail("empty polynomial");
        Polynomial p;
        double sign = 1.0;
        if (peek() == '+' || peek() == '-') sign = take() == '-' ? -1.0 : 1.0;
        p += term() * sign;
        while (pos_ < src_.size())
        {
            const char op = take();
            if (op != '+' && op != '-') fail("expected '+' or '-'");
            p += term() * (op == '-' ? -1.0 : 1.0);
        }
        return p;
    }

private:
    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
    char take() { return src_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw error(errc::parse_error,
                    msg + " at offset " + std::to_string(pos_) + " in '" + src_ + "'");
    }

    Polynomial term()
    {
        Polynomial t = factor();
        while (peek() == '*')
        {
            ++pos_;
            t = t * factor();
        }
        return t;
    }

    Polynomial factor()
    {
        const char c = peek();
        if (c == 'x' || c == 'X')
        {
            ++pos_;
            if (peek() == '_') ++pos_;
            const unsigned long id = integer();
            if (id == 0) fail("variable ids are positive integers");
            unsigned long e = 1;
            if (peek() == '^')
            {
                ++pos_;
                e = integer();
            }
            return Polynomial(MultiIndex::variable(static_cast<var_id>(id),
                                                   static_cast<unsigned>(e)));
        }
        double v = 0.0;
        auto res = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
        if (res.ec != std::errc{}) fail("expected number or variable");
        pos_ = static_cast<std::size_t>(res.ptr - src_.data());
        return Polynomial(v);
    }

    unsigned long integer()
    {
        unsigned long v = 0;
        auto res = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
        if (res.ec != std::errc{}) fail("expected integer");
        pos_ = static_cast<std::size_t>(res.ptr - src_.data());
        return v;
    }

    std::string src_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses text such as `3*x1^2*x7 - 0.5`. Whitespace is ignored, variables are
/// written x<id> (or X<id>, x_<id>) with positive ids, and like terms are
/// collected.
inline Polynomial parse_polynomial(std::string_view text)
{
    return detail::PolynomialParser(text).parse();
}

} // namespace momentlimit

#endif
