#ifndef POLSYNTH_DETAIL_PARSE_HPP
#define POLSYNTH_DETAIL_PARSE_HPP

#include <stdexcept>
#include <string>

namespace polsynth::detail {

// strtod with full-token consumption; rejects "1.5abc" and empty fields
inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad number '" + s + "'");
    }
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

}  // namespace polsynth::detail

#endif
