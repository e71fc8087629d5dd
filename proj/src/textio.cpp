#include "aqf/textio.hpp"
#include "aqf/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iostream>
#include <mutex>

namespace aqf {

namespace {

std::mutex s_logMutex;
LogSink s_logSink;

}

void set_log_sink(LogSink sink)
{
    std::scoped_lock lock(s_logMutex);
    s_logSink = std::move(sink);
}

void log_warning(const std::string& msg)
{
    std::scoped_lock lock(s_logMutex);
    if (s_logSink) {
        s_logSink(msg);
    } else {
        std::cerr << "warning: " << msg << '\n';
    }
}

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::optional<double> try_parse_double(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::int64_t> try_parse_int(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return std::nullopt;
    }
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("Cannot open '{}' for writing", path.string());
    }
    return out;
}

CsvReader::CsvReader(const fs::path& path)
: _path(path)
, _in(path, std::ios::binary)
{
    if (!_in) {
        throw DataError("Cannot open '{}' for reading", path.string());
    }
    std::string line;
    if (!std::getline(_in, line)) {
        throw DataError("'{}': missing header line", path.string());
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    for (auto f : split(line, ',')) {
        _header.emplace_back(trim(f));
    }
}

std::optional<std::size_t> CsvReader::find_column(std::string_view name) const
{
    auto it = std::find(_header.begin(), _header.end(), name);
    if (it == _header.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - _header.begin());
}

std::size_t CsvReader::column(std::string_view name) const
{
    if (auto idx = find_column(name)) {
        return *idx;
    }
    throw DataError("'{}': missing column '{}'", _path.string(), name);
}

void CsvReader::require_columns(const std::vector<std::string>& names) const
{
    for (const auto& n : names) {
        column(n);
    }
    for (const auto& h : _header) {
        if (std::find(names.begin(), names.end(), h) == names.end()) {
            throw DataError("'{}': unexpected column '{}'", _path.string(), h);
        }
    }
    if (_header.size() != names.size()) {
        throw DataError("'{}': duplicate columns in header", _path.string());
    }
}

bool CsvReader::next()
{
    while (std::getline(_in, _line)) {
        if (!_line.empty() && _line.back() == '\r') {
            _line.pop_back();
        }
        ++_row;
        if (trim(_line).empty()) {
            continue;
        }
        _fields = split(_line, ',');
        if (_fields.size() != _header.size()) {
            throw DataError("'{}' row {}: expected {} fields, found {}", _path.string(), _row, _header.size(), _fields.size());
        }
        return true;
    }
    return false;
}

void CsvReader::fail(std::size_t col, std::string_view what) const
{
    throw DataError("'{}' row {} column '{}': {}", _path.string(), _row, _header.at(col), what);
}

std::string_view CsvReader::field(std::size_t col) const
{
    return trim(_fields.at(col));
}

double CsvReader::get_double(std::size_t col) const
{
    auto v = try_parse_double(field(col));
    if (!v) {
        fail(col, fmt::format("not a number: '{}'", field(col)));
    }
    if (!std::isfinite(*v)) {
        fail(col, "non-finite value");
    }
    return *v;
}

std::int64_t CsvReader::get_int(std::size_t col) const
{
    auto v = try_parse_int(field(col));
    if (!v) {
        fail(col, fmt::format("not an integer: '{}'", field(col)));
    }
    return *v;
}

std::string CsvReader::get_string(std::size_t col) const
{
    auto f = field(col);
    if (f.empty()) {
        fail(col, "empty value");
    }
    return std::string(f);
}

bool CsvReader::is_empty(std::size_t col) const
{
    return field(col).empty();
}

KeyValues KeyValues::parse(std::string_view text, std::string_view origin)
{
    KeyValues kv;
    kv._origin = std::string(origin);
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (pos >= text.size()) {
            break;
        }
        auto end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) {
            ++end;
        }
        auto token = text.substr(pos, end - pos);
        auto eq = token.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw DataError("{}: malformed token '{}', expected key=value", kv._origin, token);
        }
        kv.set(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
        pos = end;
    }
    return kv;
}

KeyValues KeyValues::read(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("Cannot open '{}' for reading", path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text, path.string());
}

void KeyValues::set(const std::string& key, std::string value)
{
    for (auto& [k, v] : _items) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    _items.emplace_back(key, std::move(value));
}

void KeyValues::set(const std::string& key, double value)
{
    set(key, format_double(value));
}

void KeyValues::set(const std::string& key, std::int64_t value)
{
    set(key, std::to_string(value));
}

bool KeyValues::has(const std::string& key) const
{
    return std::any_of(_items.begin(), _items.end(), [&](auto& item) { return item.first == key; });
}

const std::string& KeyValues::get(const std::string& key) const
{
    for (auto& [k, v] : _items) {
        if (k == key) {
            return v;
        }
    }
    throw DataError("{}: missing key '{}'", _origin, key);
}

double KeyValues::get_double(const std::string& key) const
{
    auto v = try_parse_double(get(key));
    if (!v || !std::isfinite(*v)) {
        throw DataError("{}: key '{}' is not a finite number", _origin, key);
    }
    return *v;
}

std::int64_t KeyValues::get_int(const std::string& key) const
{
    auto v = try_parse_int(get(key));
    if (!v) {
        throw DataError("{}: key '{}' is not an integer", _origin, key);
    }
    return *v;
}

std::string KeyValues::to_line() const
{
    std::string out;
    for (auto& [k, v] : _items) {
        if (!out.empty()) {
            out += ' ';
        }
        out += k;
        out += '=';
        out += v;
    }
    return out;
}

}
