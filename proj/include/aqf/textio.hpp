#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aqf {

namespace fs = std::filesystem;

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

std::optional<double> try_parse_double(std::string_view s);
std::optional<std::int64_t> try_parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Opens a file for writing with LF line endings; throws on failure.
std::ofstream open_output(const fs::path& path);

/// Line-oriented reader for the comma separated interchange files.
///
/// The first line is the header. Fields are plain (no quoting); every data
/// row must carry exactly as many fields as the header. Parse errors name the
/// file, the 1-based data row and the column.
class CsvReader
{
public:
    explicit CsvReader(const fs::path& path);

    const std::vector<std::string>& header() const noexcept { return _header; }
    const fs::path& path() const noexcept { return _path; }

    /// Index of a required column; throws DataError naming the column when absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;

    /// Throws unless the header holds exactly the given set of columns.
    void require_columns(const std::vector<std::string>& names) const;

    /// Advances to the next data row; false at end of file.
    bool next();

    std::size_t row_number() const noexcept { return _row; }
    std::string_view field(std::size_t col) const;
    double get_double(std::size_t col) const;
    std::int64_t get_int(std::size_t col) const;
    std::string get_string(std::size_t col) const;
    bool is_empty(std::size_t col) const;

private:
    [[noreturn]] void fail(std::size_t col, std::string_view what) const;

    fs::path _path;
    std::ifstream _in;
    std::vector<std::string> _header;
    std::string _line;
    std::vector<std::string_view> _fields;
    std::size_t _row = 0;
};

/// Flat `key=value` records, whitespace separated, used by the sidecar files
/// (`lat_min=36 lon_min=-10 cell_size=0.03 n_rows=300 n_cols=430`).
class KeyValues
{
public:
    KeyValues() = default;

    static KeyValues parse(std::string_view text, std::string_view origin = "<text>");
    static KeyValues read(const fs::path& path);

    void set(const std::string& key, std::string value);
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;

    /// Single line, keys in insertion order.
    std::string to_line() const;

private:
    std::string _origin = "<memory>";
    std::vector<std::pair<std::string, std::string>> _items;
};

}
