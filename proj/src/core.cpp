#include "aqf/core.hpp"
#include "aqf/error.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace aqf {

using namespace std::chrono;

namespace {

constexpr std::int64_t civil_to_unix(int y, unsigned m, unsigned d)
{
    return sys_seconds(sys_days(year(y) / month(m) / day(d))).time_since_epoch().count();
}

constexpr std::int64_t s_minUnix = civil_to_unix(Timestamp::min_year, 1, 1);
constexpr std::int64_t s_endUnix = civil_to_unix(Timestamp::max_year + 1, 1, 1);

}

bool Timestamp::is_valid_unix(std::int64_t seconds) noexcept
{
    return seconds >= s_minUnix && seconds < s_endUnix;
}

Timestamp Timestamp::from_unix(std::int64_t seconds)
{
    if (!is_valid_unix(seconds)) {
        throw InvalidArgument("Timestamp {} outside supported years {}..{}", seconds, min_year, max_year);
    }
    return Timestamp(seconds);
}

Timestamp Timestamp::from_civil(int y, unsigned m, unsigned d, unsigned hh, unsigned mm, unsigned ss)
{
    const year_month_day ymd{year(y), month(m), day(d)};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
        throw InvalidArgument("Invalid civil time {:04}-{:02}-{:02}T{:02}:{:02}:{:02}", y, m, d, hh, mm, ss);
    }
    return from_unix(civil_to_unix(y, m, d) + hh * 3600 + mm * 60 + ss);
}

std::string Timestamp::to_iso() const
{
    const sys_seconds tp{seconds(_seconds)};
    const auto dayStart = floor<days>(tp);
    const year_month_day ymd{dayStart};
    const hh_mm_ss hms{tp - dayStart};
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
                       int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                       hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

void GeoPoint::validate() const
{
    if (!std::isfinite(latitude) || latitude < -90.0 || latitude > 90.0) {
        throw InvalidArgument("Latitude {} outside [-90, 90]", latitude);
    }
    if (!std::isfinite(longitude) || longitude < -180.0 || longitude > 180.0) {
        throw InvalidArgument("Longitude {} outside [-180, 180]", longitude);
    }
    if (!std::isfinite(altitude)) {
        throw InvalidArgument("Altitude is not finite");
    }
}

StationType station_type_from_code(std::int64_t code)
{
    switch (code) {
    case 1: return StationType::Industrial;
    case 2: return StationType::Traffic;
    case 3: return StationType::Background;
    default:
        throw InvalidArgument("Station type code {} not in {{1, 2, 3}}", code);
    }
}

std::string_view pollutant_name(PollutantKind p) noexcept
{
    switch (p) {
    case PollutantKind::NO2: return "no2";
    case PollutantKind::O3: return "o3";
    case PollutantKind::SO2: return "so2";
    case PollutantKind::PM10: return "pm10";
    case PollutantKind::PM25: return "pm25";
    }
    return "";
}

PollutantKind parse_pollutant(std::string_view name)
{
    std::string lower;
    for (char c : name) {
        if (c != '.' && c != '_') {
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    for (auto p : all_pollutants) {
        if (lower == pollutant_name(p)) {
            return p;
        }
    }
    throw InvalidArgument("Unknown pollutant '{}' (expected no2, o3, so2, pm10 or pm25)", name);
}

std::string_view satellite_variable(PollutantKind p) noexcept
{
    switch (p) {
    case PollutantKind::NO2: return "tropospheric_no2_column";
    case PollutantKind::O3: return "o3_total_column";
    case PollutantKind::SO2: return "so2_total_column";
    case PollutantKind::PM10:
    case PollutantKind::PM25: return "absorbing_aerosol_index";
    }
    return "";
}

double default_qa_threshold(PollutantKind p) noexcept
{
    return (p == PollutantKind::PM10 || p == PollutantKind::PM25) ? 0.8 : 0.75;
}

bool is_leap_year(int y) noexcept
{
    return year(y).is_leap();
}

TemporalFeatures temporal_features(Timestamp t) noexcept
{
    const sys_seconds tp{seconds(t.unix_seconds())};
    const auto dayStart = floor<days>(tp);
    const year_month_day ymd{dayStart};
    const sys_days jan1 = ymd.year() / January / 1;

    TemporalFeatures f;
    f.day_of_week = static_cast<int>(weekday(dayStart).iso_encoding());
    f.day_of_year = static_cast<int>((dayStart - jan1).count()) + 1;
    f.hour = static_cast<int>(floor<hours>(tp - dayStart).count());
    f.month = static_cast<int>(unsigned(ymd.month()));
    f.year = static_cast<int>(ymd.year());
    return f;
}

Wind wind(double u, double v) noexcept
{
    Wind w;
    w.speed = std::hypot(u, v);
    if (u == 0.0 && v == 0.0) {
        return w;
    }
    double dir = std::fmod(180.0 + std::atan2(u, v) * 180.0 / std::numbers::pi, 360.0);
    if (dir < 0.0) {
        dir += 360.0;
    }
    if (dir >= 360.0) {
        dir = 0.0;
    }
    w.direction = dir;
    return w;
}

}
