#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace aqf {

/// UTC instant with one-second resolution, restricted to years 1979..2100.
class Timestamp
{
public:
    static constexpr int min_year = 1979;
    static constexpr int max_year = 2100;

    /// 1979-01-01T00:00:00Z, the earliest supported instant.
    constexpr Timestamp() noexcept = default;

    /// Throws InvalidArgument when the instant falls outside the supported years.
    static Timestamp from_unix(std::int64_t seconds);
    static Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour = 0, unsigned minute = 0, unsigned second = 0);

    static bool is_valid_unix(std::int64_t seconds) noexcept;

    constexpr std::int64_t unix_seconds() const noexcept { return _seconds; }

    /// `YYYY-MM-DDTHH:MM:SSZ`
    std::string to_iso() const;

    constexpr auto operator<=>(const Timestamp&) const = default;

private:
    constexpr explicit Timestamp(std::int64_t s) noexcept
    : _seconds(s)
    {
    }

    std::int64_t _seconds = 283996800;
};

struct GeoPoint
{
    double latitude = 0.0;
    double longitude = 0.0;
    double altitude = 0.0;

    /// Throws InvalidArgument for out-of-range or non-finite coordinates.
    void validate() const;
};

enum class StationType : int
{
    Industrial = 1,
    Traffic = 2,
    Background = 3,
};

StationType station_type_from_code(std::int64_t code);
constexpr int station_type_code(StationType t) noexcept { return static_cast<int>(t); }

struct StationMeta
{
    std::string station_id;
    GeoPoint location;
    StationType station_type = StationType::Background;
};

enum class PollutantKind
{
    NO2,
    O3,
    SO2,
    PM10,
    PM25,
};

inline constexpr std::array<PollutantKind, 5> all_pollutants{
    PollutantKind::NO2, PollutantKind::O3, PollutantKind::SO2, PollutantKind::PM10, PollutantKind::PM25};

/// Lower-case name used on the command line and in file names (`no2`, `pm25`, ...).
std::string_view pollutant_name(PollutantKind p) noexcept;
PollutantKind parse_pollutant(std::string_view name);

/// Satellite product variable paired with each pollutant.
std::string_view satellite_variable(PollutantKind p) noexcept;

/// Recommended swath quality threshold for the pollutant's satellite product.
double default_qa_threshold(PollutantKind p) noexcept;

struct TemporalFeatures
{
    int day_of_week = 0; // 1 = Monday .. 7 = Sunday
    int day_of_year = 0; // 1 = Jan 1
    int hour = 0;
    int month = 0;
    int year = 0;

    bool operator==(const TemporalFeatures&) const = default;
};

TemporalFeatures temporal_features(Timestamp t) noexcept;

bool is_leap_year(int year) noexcept;

struct Wind
{
    double speed = 0.0;     // m/s
    double direction = 0.0; // degrees clockwise from north the wind blows FROM, [0, 360)
};

/// Speed and meteorological direction from eastward (u) and northward (v) components.
/// Calm (0, 0) maps to direction 0.
Wind wind(double u, double v) noexcept;

}
