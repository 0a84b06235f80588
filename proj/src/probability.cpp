#include "prtspace/probability.hpp"

#include <cctype>
#include <cmath>
#include <string>

namespace prtspace {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

mpz_class pow10(unsigned long exponent) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), 10, exponent);
    return r;
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

// Unsigned decimal with optional fraction and exponent: 12, 0.5, .5, 5e-10, 1.25E+3
Probability parse_decimal(std::string_view s, std::string_view original) {
    auto fail = [&] { return NumberFormatError("malformed number '" + std::string(original) + "'"); };
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        std::string_view exp_text = s.substr(e + 1);
        s = s.substr(0, e);
        bool negative = false;
        if (!exp_text.empty() && (exp_text.front() == '+' || exp_text.front() == '-')) {
            negative = exp_text.front() == '-';
            exp_text.remove_prefix(1);
        }
        if (!all_digits(exp_text) || exp_text.size() > 4) throw fail();
        exponent = std::stol(std::string(exp_text));
        if (negative) exponent = -exponent;
    }
    std::string digits;
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
        std::string_view int_part = s.substr(0, dot);
        std::string_view frac_part = s.substr(dot + 1);
        if (int_part.empty() && frac_part.empty()) throw fail();
        if (!int_part.empty() && !all_digits(int_part)) throw fail();
        if (!frac_part.empty() && !all_digits(frac_part)) throw fail();
        digits = std::string(int_part) + std::string(frac_part);
        exponent -= static_cast<long>(frac_part.size());
    } else {
        if (!all_digits(s)) throw fail();
        digits = std::string(s);
    }
    Probability value{mpz_class(digits, 10)};
    if (exponent >= 0)
        value *= Probability(pow10(static_cast<unsigned long>(exponent)));
    else
        value /= Probability(pow10(static_cast<unsigned long>(-exponent)));
    value.canonicalize();
    return value;
}

}  // namespace

Probability parse_probability(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty()) throw NumberFormatError("empty number");
    bool percent = false;
    if (s.back() == '%') {
        percent = true;
        s = trim(s.substr(0, s.size() - 1));
    }
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    Probability value;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        std::string_view num = trim(s.substr(0, slash));
        std::string_view den = trim(s.substr(slash + 1));
        if (!all_digits(num) || !all_digits(den)) throw NumberFormatError("malformed fraction '" + std::string(text) + "'");
        mpz_class d(std::string(den), 10);
        if (d == 0) throw NumberFormatError("zero denominator in '" + std::string(text) + "'");
        value = Probability(mpz_class(std::string(num), 10), d);
        value.canonicalize();
    } else {
        value = parse_decimal(s, text);
    }
    if (percent) value /= 100;
    if (negative) value = -value;
    return value;
}

std::string to_exact_string(const Probability& value) {
    Probability p = value;
    p.canonicalize();
    mpz_class den = p.get_den();
    unsigned long twos = 0, fives = 0;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
        den /= 2;
        ++twos;
    }
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
        den /= 5;
        ++fives;
    }
    if (den != 1) return p.get_str(10);

    unsigned long places = std::max(twos, fives);
    mpz_class scaled = p.get_num() * pow10(places) / p.get_den();
    bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string digits = scaled.get_str(10);
    if (places > 0) {
        if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
        digits.insert(digits.size() - places, ".");
    }
    return negative ? "-" + digits : digits;
}

std::string to_decimal_string(const Probability& p, int digits) {
    if (digits < 1) digits = 1;
    if (p == 0) return "0";
    Probability magnitude = abs(p);

    // Decimal exponent e with 10^e <= magnitude < 10^(e+1).
    long e = static_cast<long>(std::floor(std::log10(to_double(magnitude))));
    auto scale_of = [](long k) {
        return k >= 0 ? Probability(pow10(static_cast<unsigned long>(k)))
                      : Probability(mpz_class(1), pow10(static_cast<unsigned long>(-k)));
    };
    while (magnitude < scale_of(e)) --e;
    while (magnitude >= scale_of(e + 1)) ++e;

    // Round half up to `digits` significant digits.
    Probability scaled = magnitude / scale_of(e - digits + 1);
    mpz_class rounded = (scaled.get_num() * 2 + scaled.get_den()) / (scaled.get_den() * 2);
    std::string mantissa = rounded.get_str(10);
    if (static_cast<int>(mantissa.size()) > digits) {
        mantissa.pop_back();
        ++e;
    }

    std::string out;
    if (e >= -6 && e < 21) {
        long point = e + 1;  // digits before the decimal point
        if (point <= 0) {
            out = "0." + std::string(static_cast<size_t>(-point), '0') + mantissa;
        } else if (point >= static_cast<long>(mantissa.size())) {
            out = mantissa + std::string(static_cast<size_t>(point) - mantissa.size(), '0');
        } else {
            out = mantissa.substr(0, static_cast<size_t>(point)) + "." + mantissa.substr(static_cast<size_t>(point));
        }
        if (out.find('.') != std::string::npos) {
            while (out.back() == '0') out.pop_back();
            if (out.back() == '.') out.pop_back();
        }
    } else {
        out = mantissa.substr(0, 1);
        std::string rest = mantissa.substr(1);
        while (!rest.empty() && rest.back() == '0') rest.pop_back();
        if (!rest.empty()) out += "." + rest;
        out += "e" + std::to_string(e);
    }
    return p < 0 ? "-" + out : out;
}

double to_double(const Probability& p) { return p.get_d(); }

Probability from_double(double value) {
    if (!std::isfinite(value)) throw NumberFormatError("non-finite probability");
    Probability r;
    mpq_set_d(r.get_mpq_t(), value);
    return r;
}

}  // namespace prtspace
