#include "cpend/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "cpend/error.hpp"

namespace cpend {

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Complex parse()
    {
        const Complex v = expression();
        skip_space();
        if (pos_ != text_.size())
            fail("unexpected character");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ConfigError("expression \"" + std::string(text_) + "\": " + what + " at position " +
                          std::to_string(pos_));
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Complex expression()
    {
        Complex v = term();
        while (true) {
            if (accept('+'))
                v += term();
            else if (accept('-'))
                v -= term();
            else
                return v;
        }
    }

    Complex term()
    {
        Complex v = unary();
        while (true) {
            if (accept('*'))
                v *= unary();
            else if (accept('/'))
                v /= unary();
            else
                return v;
        }
    }

    Complex unary()
    {
        if (accept('-'))
            return -unary();
        if (accept('+'))
            return unary();
        return power();
    }

    Complex power()
    {
        const Complex base = primary();
        if (accept('^')) {
            const Complex ex = unary();
            if (ex.imag() == 0.0 && ex.real() == std::round(ex.real()) && std::abs(ex.real()) <= 64) {
                Complex r = 1.0;
                const int n = static_cast<int>(ex.real());
                for (int k = 0; k < std::abs(n); ++k)
                    r *= base;
                return n < 0 ? 1.0 / r : r;
            }
            return std::pow(base, ex);
        }
        return base;
    }

    bool at_primary_start()
    {
        skip_space();
        if (pos_ >= text_.size())
            return false;
        const char c = text_[pos_];
        return std::isalpha(static_cast<unsigned char>(c)) || c == '(';
    }

    Complex primary()
    {
        skip_space();
        if (pos_ >= text_.size())
            fail("unexpected end of input");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const Complex num = number();
            // Implicit multiplication: "2pi", "0.5i", "2cos(1)", "3(1+i)".
            if (at_primary_start())
                return num * power();
            return num;
        }
        if (accept('(')) {
            const Complex v = expression();
            if (!accept(')'))
                fail("expected ')'");
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c)))
            return identifier();
        fail("unexpected character");
    }

    Complex number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            const bool exp_sign = (c == '+' || c == '-') && pos_ > start &&
                                  (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E');
            const bool exponent = (c == 'e' || c == 'E') && pos_ + 1 < text_.size() &&
                                  (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
                                   text_[pos_ + 1] == '+' || text_[pos_ + 1] == '-');
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || exp_sign || exponent)
                ++pos_;
            else
                break;
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_)
            fail("malformed number");
        return value;
    }

    Complex identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name == "i")
            return kI;
        if (name == "pi")
            return kPi;
        if (name == "e")
            return std::exp(1.0);
        if (!accept('('))
            fail("unknown identifier '" + std::string(name) + "'");
        const Complex arg = expression();
        if (!accept(')'))
            fail("expected ')'");
        if (name == "sin") return csin(arg);
        if (name == "cos") return ccos(arg);
        if (name == "tan") return csin(arg) / ccos(arg);
        if (name == "sinh") return std::sinh(arg);
        if (name == "cosh") return std::cosh(arg);
        if (name == "tanh") return std::tanh(arg);
        if (name == "asinh") return std::asinh(arg);
        if (name == "acosh") return std::acosh(arg);
        if (name == "exp") return std::exp(arg);
        if (name == "log") return std::log(arg);
        if (name == "sqrt") return principal_sqrt(arg);
        fail("unknown function '" + std::string(name) + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Complex parse_complex(std::string_view text) { return Parser(text).parse(); }

double parse_real(std::string_view text)
{
    const Complex v = parse_complex(text);
    if (v.imag() != 0.0)
        throw ConfigError("expression \"" + std::string(text) + "\" must be real");
    return v.real();
}

}  // namespace cpend
