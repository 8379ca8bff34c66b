#include <cctype>
#include <charconv>
#include <cstdio>
#include <ctime>

#include "glean/acquisition.hpp"

namespace glean::acquisition {

namespace {

struct Fields {
    int year, month, day, hour, minute, second;
};

Fields split_time(Timestamp t) {
    const std::time_t tt = t.time_since_epoch().count();
    std::tm tm{};
    gmtime_r(&tt, &tm);
    return {tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec};
}

Timestamp join_time(const Fields& f, std::string_view source) {
    if (f.month < 1 || f.month > 12 || f.day < 1 || f.day > 31 || f.hour > 23 || f.minute > 59 ||
        f.second > 60) {
        throw SchemaError("timestamp out of range: " + std::string(source));
    }
    std::tm tm{};
    tm.tm_year = f.year - 1900;
    tm.tm_mon = f.month - 1;
    tm.tm_mday = f.day;
    tm.tm_hour = f.hour;
    tm.tm_min = f.minute;
    tm.tm_sec = f.second;
    const auto tt = timegm(&tm);
    const Timestamp out{std::chrono::seconds{tt}};
    const auto check = split_time(out);
    if (check.day != f.day || check.month != f.month)
        throw SchemaError("invalid calendar date: " + std::string(source));
    return out;
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool name_token_ok(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

bool slug_safe(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
        if (!ok) return false;
    }
    return true;
}

}  // namespace

std::string slugify(std::string_view prompt) {
    std::string out;
    out.reserve(prompt.size());
    for (char c : prompt) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) && u < 0x80) {
            out.push_back(static_cast<char>(std::tolower(u)));
        } else if (c == ' ') {
            out.push_back('-');
        }
    }
    return out;
}

std::string format_compact_timestamp(Timestamp t) {
    const auto f = split_time(t);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02dZ", f.year, f.month, f.day, f.hour,
                  f.minute, f.second);
    return buf;
}

Timestamp parse_compact_timestamp(std::string_view text) {
    if (text.size() != 16 || text[8] != 'T' || text[15] != 'Z')
        throw SchemaError("unparsable timestamp: " + std::string(text));
    Fields f{};
    const bool ok = parse_int(text.substr(0, 4), f.year) && parse_int(text.substr(4, 2), f.month) &&
                    parse_int(text.substr(6, 2), f.day) && parse_int(text.substr(9, 2), f.hour) &&
                    parse_int(text.substr(11, 2), f.minute) &&
                    parse_int(text.substr(13, 2), f.second);
    if (!ok) throw SchemaError("unparsable timestamp: " + std::string(text));
    return join_time(f, text);
}

std::string format_iso_timestamp(Timestamp t) {
    const auto f = split_time(t);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", f.year, f.month, f.day,
                  f.hour, f.minute, f.second);
    return buf;
}

Timestamp parse_iso_timestamp(std::string_view text) {
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
        throw SchemaError("unparsable timestamp: " + std::string(text));
    }
    Fields f{};
    const bool ok = parse_int(text.substr(0, 4), f.year) && parse_int(text.substr(5, 2), f.month) &&
                    parse_int(text.substr(8, 2), f.day) && parse_int(text.substr(11, 2), f.hour) &&
                    parse_int(text.substr(14, 2), f.minute) &&
                    parse_int(text.substr(17, 2), f.second);
    if (!ok) throw SchemaError("unparsable timestamp: " + std::string(text));
    return join_time(f, text);
}

std::string format_record_name(const RecordName& name) {
    if (!name_token_ok(name.model))
        throw PreconditionError("model id must be non-empty [A-Za-z0-9.-]: " + name.model);
    if (!slug_safe(name.prompt_slug))
        throw PreconditionError("prompt slug is not slug-safe: " + name.prompt_slug);
    if (name.index < 0) throw PreconditionError("record index must be non-negative");
    char idx[16];
    std::snprintf(idx, sizeof idx, "%04d", name.index);
    return name.model + "_" + name.prompt_slug + "_" + idx + "_" +
           format_compact_timestamp(name.timestamp) + ".png";
}

RecordName parse_record_name(std::string_view filename) {
    const auto bad = [&](const std::string& why) {
        return SchemaError("malformed record name \"" + std::string(filename) + "\": " + why);
    };
    if (!filename.ends_with(".png")) throw bad("expected .png extension");
    auto stem = filename.substr(0, filename.size() - 4);

    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = stem.find('_', start);
        parts.push_back(stem.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (parts.size() != 4) throw bad("expected 4 underscore-separated fields");

    RecordName out;
    if (!name_token_ok(parts[0])) throw bad("invalid model id");
    out.model = std::string(parts[0]);
    if (!slug_safe(parts[1])) throw bad("invalid prompt slug");
    out.prompt_slug = std::string(parts[1]);
    if (!parse_int(parts[2], out.index)) throw bad("non-numeric index");
    try {
        out.timestamp = parse_compact_timestamp(parts[3]);
    } catch (const SchemaError&) {
        throw bad("unparsable timestamp");
    }
    return out;
}

}  // namespace glean::acquisition
