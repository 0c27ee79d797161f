#pragma once

#include <limits>
#include <ostream>
#include <stdexcept>
#include <variant>

namespace capmin {

struct PlusInfinity {
    friend bool operator==(PlusInfinity, PlusInfinity) { return true; }
};

// A real number or +infinity, with the infinite case tagged explicitly.
class Extended {
public:
    Extended() : v_(0.0) {}
    Extended(double x) : v_(x) {}
    Extended(PlusInfinity) : v_(PlusInfinity{}) {}

    static Extended infinity() { return Extended(PlusInfinity{}); }

    bool is_finite() const { return std::holds_alternative<double>(v_); }
    bool is_infinite() const { return !is_finite(); }

    double value() const
    {
        if (!is_finite())
            throw std::logic_error("Extended::value on +inf");
        return std::get<double>(v_);
    }

    // IEEE view, for comparisons only
    double as_double() const
    {
        return is_finite() ? std::get<double>(v_) : std::numeric_limits<double>::infinity();
    }

    friend bool operator==(const Extended& a, const Extended& b) { return a.v_ == b.v_; }

    friend std::ostream& operator<<(std::ostream& os, const Extended& e)
    {
        if (e.is_finite())
            return os << e.value();
        return os << "inf";
    }

private:
    std::variant<double, PlusInfinity> v_;
};

} // namespace capmin
