#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace eolsr::text
{
    // Shortest round-trip representation.
    inline std::string format_double(double v)
    {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, ptr);
    }

    // Fixed-point with `digits` decimals, for human-facing tables.
    inline std::string format_fixed(double v, int digits)
    {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
        return std::string(buf, ptr);
    }

    inline std::string_view trim(std::string_view s)
    {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
        {
            s.remove_prefix(1);
        }
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        {
            s.remove_suffix(1);
        }
        return s;
    }

    inline std::vector<std::string_view> split(std::string_view s, char sep)
    {
        std::vector<std::string_view> out;
        std::size_t pos = 0;
        while (true)
        {
            auto next = s.find(sep, pos);
            if (next == std::string_view::npos)
            {
                out.push_back(s.substr(pos));
                return out;
            }
            out.push_back(s.substr(pos, next - pos));
            pos = next + 1;
        }
    }

    template <typename T>
    std::optional<T> parse_number(std::string_view s)
    {
        s = trim(s);
        if (!s.empty() && s.front() == '+')
        {
            s.remove_prefix(1);
        }
        T value{};
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        {
            return std::nullopt;
        }
        return value;
    }
} // namespace eolsr::text
