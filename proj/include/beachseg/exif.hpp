#pragma once

// Minimal EXIF reader for the flight metadata carried by UAV JPEGs:
// GPS position and altitude, exposure time, f-number and ISO.
//
// All reads go through a bounds-checked view of the TIFF block embedded in
// the APP1 segment; nothing outside the declared segment length is touched.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "beachseg/error.hpp"

namespace beachseg {

struct Rational {
  std::uint32_t numerator = 0;
  std::uint32_t denominator = 1;

  double value() const noexcept {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct FlightMetadata {
  std::optional<double> latitude;   // signed decimal degrees, north positive
  std::optional<double> longitude;  // signed decimal degrees, east positive
  std::optional<double> altitude;   // meters, negative below the reference
  std::optional<std::uint8_t> altitude_ref;  // raw GPSAltitudeRef byte
  std::optional<Rational> shutter;  // exposure time, seconds
  std::optional<Rational> aperture;  // f-number
  std::optional<std::uint32_t> iso;

  bool empty() const noexcept {
    return !latitude && !longitude && !altitude && !altitude_ref && !shutter && !aperture &&
           !iso;
  }
  friend bool operator==(const FlightMetadata&, const FlightMetadata&) = default;
};

struct Dms {
  double degrees = 0;
  double minutes = 0;
  double seconds = 0;
};

inline double dms_to_decimal(double degrees, double minutes, double seconds) {
  return degrees + minutes / 60.0 + seconds / 3600.0;
}

/// Unsigned DMS of |decimal|; sign is carried separately by the hemisphere.
inline Dms decimal_to_dms(double decimal) {
  const double magnitude = std::fabs(decimal);
  Dms out;
  out.degrees = std::floor(magnitude);
  const double rem_minutes = (magnitude - out.degrees) * 60.0;
  out.minutes = std::floor(rem_minutes);
  out.seconds = (rem_minutes - out.minutes) * 60.0;
  return out;
}

namespace exif_tags {
inline constexpr std::uint16_t kExifIfdPointer = 0x8769;
inline constexpr std::uint16_t kGpsIfdPointer = 0x8825;
inline constexpr std::uint16_t kExposureTime = 0x829A;
inline constexpr std::uint16_t kFNumber = 0x829D;
inline constexpr std::uint16_t kIsoSpeedRatings = 0x8827;
inline constexpr std::uint16_t kGpsLatitudeRef = 0x0001;
inline constexpr std::uint16_t kGpsLatitude = 0x0002;
inline constexpr std::uint16_t kGpsLongitudeRef = 0x0003;
inline constexpr std::uint16_t kGpsLongitude = 0x0004;
inline constexpr std::uint16_t kGpsAltitudeRef = 0x0005;
inline constexpr std::uint16_t kGpsAltitude = 0x0006;
}  // namespace exif_tags

namespace exif_types {
inline constexpr std::uint16_t kByte = 1;
inline constexpr std::uint16_t kAscii = 2;
inline constexpr std::uint16_t kShort = 3;
inline constexpr std::uint16_t kLong = 4;
inline constexpr std::uint16_t kRational = 5;
inline constexpr std::uint16_t kUndefined = 7;
inline constexpr std::uint16_t kSLong = 9;
inline constexpr std::uint16_t kSRational = 10;
}  // namespace exif_types

namespace detail {

[[noreturn]] inline void malformed(const std::string& what) {
  throw Error(ErrorKind::MalformedExif, what);
}

class TiffReader {
 public:
  explicit TiffReader(std::span<const std::uint8_t> tiff) : tiff_(tiff) {
    if (tiff_.size() < 8) malformed("TIFF header truncated");
    if (tiff_[0] == 'I' && tiff_[1] == 'I') {
      little_endian_ = true;
    } else if (tiff_[0] == 'M' && tiff_[1] == 'M') {
      little_endian_ = false;
    } else {
      malformed("bad TIFF byte-order mark");
    }
    if (u16(2) != 42) malformed("bad TIFF magic");
  }

  std::uint32_t first_ifd() const { return u32(4); }

  std::uint16_t u16(std::uint64_t offset) const {
    need(offset, 2);
    const std::uint8_t a = tiff_[offset], b = tiff_[offset + 1];
    return little_endian_ ? static_cast<std::uint16_t>(a | (b << 8))
                          : static_cast<std::uint16_t>((a << 8) | b);
  }

  std::uint32_t u32(std::uint64_t offset) const {
    need(offset, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint32_t byte = tiff_[offset + static_cast<std::uint64_t>(i)];
      v |= little_endian_ ? byte << (8 * i) : byte << (8 * (3 - i));
    }
    return v;
  }

  std::uint8_t u8(std::uint64_t offset) const {
    need(offset, 1);
    return tiff_[offset];
  }

  void need(std::uint64_t offset, std::uint64_t length) const {
    if (offset > tiff_.size() || length > tiff_.size() - offset) {
      malformed("offset " + std::to_string(offset) + "+" + std::to_string(length) +
                " outside TIFF block of " + std::to_string(tiff_.size()) + " bytes");
    }
  }

 private:
  std::span<const std::uint8_t> tiff_;
  bool little_endian_ = true;
};

struct IfdEntry {
  std::uint16_t tag = 0;
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::uint64_t value_offset = 0;  // where the value bytes start inside the TIFF block
};

inline std::uint64_t type_size(std::uint16_t type) {
  switch (type) {
    case exif_types::kByte:
    case exif_types::kAscii:
    case exif_types::kUndefined: return 1;
    case exif_types::kShort: return 2;
    case exif_types::kLong:
    case exif_types::kSLong: return 4;
    case exif_types::kRational:
    case exif_types::kSRational: return 8;
    default: return 0;
  }
}

/// Visits every entry of the IFD at `offset`. Entries of unknown type are
/// passed with value_offset 0 and must be skipped by the visitor.
template <typename Visitor>
void walk_ifd(const TiffReader& tiff, std::uint32_t offset, Visitor&& visit) {
  const std::uint16_t count = tiff.u16(offset);
  tiff.need(static_cast<std::uint64_t>(offset) + 2, static_cast<std::uint64_t>(count) * 12);
  for (std::uint16_t i = 0; i < count; ++i) {
    const std::uint64_t at = static_cast<std::uint64_t>(offset) + 2 + 12ull * i;
    IfdEntry entry;
    entry.tag = tiff.u16(at);
    entry.type = tiff.u16(at + 2);
    entry.count = tiff.u32(at + 4);
    const std::uint64_t size = type_size(entry.type) * entry.count;
    if (type_size(entry.type) != 0) {
      entry.value_offset = size <= 4 ? at + 8 : tiff.u32(at + 8);
    }
    visit(entry);
  }
}

inline void expect_type(const IfdEntry& e, std::uint16_t type, std::uint32_t min_count) {
  if (e.type != type || e.count < min_count) {
    char tag[8];
    std::snprintf(tag, sizeof tag, "0x%04X", e.tag);
    malformed(std::string("tag ") + tag + " has unexpected type or count");
  }
}

inline std::optional<Rational> read_rational(const TiffReader& tiff, std::uint64_t offset) {
  tiff.need(offset, 8);
  Rational r{tiff.u32(offset), tiff.u32(offset + 4)};
  if (r.denominator == 0) return std::nullopt;
  return r;
}

inline std::optional<double> read_dms(const TiffReader& tiff, const IfdEntry& e) {
  expect_type(e, exif_types::kRational, 3);
  tiff.need(e.value_offset, 24);
  const auto d = read_rational(tiff, e.value_offset);
  const auto m = read_rational(tiff, e.value_offset + 8);
  const auto s = read_rational(tiff, e.value_offset + 16);
  if (!d || !m || !s) return std::nullopt;
  return dms_to_decimal(d->value(), m->value(), s->value());
}

inline std::optional<char> read_ref(const TiffReader& tiff, const IfdEntry& e) {
  if ((e.type != exif_types::kAscii && e.type != exif_types::kByte) || e.count < 1) {
    malformed("GPS reference tag has unexpected type");
  }
  return static_cast<char>(tiff.u8(e.value_offset));
}

inline FlightMetadata parse_tiff(std::span<const std::uint8_t> block) {
  using namespace exif_tags;
  const TiffReader tiff(block);
  FlightMetadata meta;
  std::optional<std::uint32_t> exif_ifd, gps_ifd;

  auto read_exposure_tags = [&](const IfdEntry& e) {
    switch (e.tag) {
      case kExposureTime:
        expect_type(e, exif_types::kRational, 1);
        meta.shutter = read_rational(tiff, e.value_offset);
        break;
      case kFNumber:
        expect_type(e, exif_types::kRational, 1);
        meta.aperture = read_rational(tiff, e.value_offset);
        break;
      case kIsoSpeedRatings:
        if (e.type == exif_types::kShort && e.count >= 1) {
          meta.iso = tiff.u16(e.value_offset);
        } else if (e.type == exif_types::kLong && e.count >= 1) {
          meta.iso = tiff.u32(e.value_offset);
        } else {
          malformed("ISO tag has unexpected type");
        }
        break;
      default: break;
    }
  };

  walk_ifd(tiff, tiff.first_ifd(), [&](const IfdEntry& e) {
    if (e.tag == kExifIfdPointer || e.tag == kGpsIfdPointer) {
      if ((e.type != exif_types::kLong && e.type != exif_types::kUndefined) || e.count != 1) {
        malformed("sub-IFD pointer has unexpected type");
      }
      (e.tag == kExifIfdPointer ? exif_ifd : gps_ifd) = tiff.u32(e.value_offset);
    } else {
      read_exposure_tags(e);
    }
  });

  if (exif_ifd) walk_ifd(tiff, *exif_ifd, read_exposure_tags);

  if (gps_ifd) {
    std::optional<char> lat_ref, lon_ref;
    std::optional<double> lat, lon;
    std::optional<Rational> alt;
    walk_ifd(tiff, *gps_ifd, [&](const IfdEntry& e) {
      switch (e.tag) {
        case kGpsLatitudeRef: lat_ref = read_ref(tiff, e); break;
        case kGpsLatitude: lat = read_dms(tiff, e); break;
        case kGpsLongitudeRef: lon_ref = read_ref(tiff, e); break;
        case kGpsLongitude: lon = read_dms(tiff, e); break;
        case kGpsAltitudeRef:
          if ((e.type != exif_types::kByte && e.type != exif_types::kUndefined) || e.count < 1) {
            malformed("GPSAltitudeRef has unexpected type");
          }
          meta.altitude_ref = tiff.u8(e.value_offset);
          break;
        case kGpsAltitude:
          expect_type(e, exif_types::kRational, 1);
          alt = read_rational(tiff, e.value_offset);
          break;
        default: break;
      }
    });
    if (lat && lat_ref) {
      if (*lat_ref != 'N' && *lat_ref != 'S') malformed("GPSLatitudeRef must be N or S");
      if (*lat > 90.0) malformed("latitude out of range");
      meta.latitude = *lat_ref == 'S' ? -*lat : *lat;
    }
    if (lon && lon_ref) {
      if (*lon_ref != 'E' && *lon_ref != 'W') malformed("GPSLongitudeRef must be E or W");
      if (*lon > 180.0) malformed("longitude out of range");
      meta.longitude = *lon_ref == 'W' ? -*lon : *lon;
    }
    if (alt) {
      const bool below = meta.altitude_ref.value_or(0) == 1;
      meta.altitude = below ? -alt->value() : alt->value();
    }
  }
  return meta;
}

}  // namespace detail

/// Walks the JPEG marker segments up to the first scan and parses the first
/// APP1 segment that carries an "Exif\0\0" header. A JPEG without EXIF yields
/// an empty record.
inline FlightMetadata parse_exif(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 0xFF || bytes[1] != 0xD8) {
    throw Error(ErrorKind::NotJpeg, "missing start-of-image marker");
  }
  std::size_t pos = 2;
  while (pos < bytes.size()) {
    if (bytes[pos] != 0xFF) detail::malformed("expected marker at byte " + std::to_string(pos));
    while (pos < bytes.size() && bytes[pos] == 0xFF) ++pos;  // fill bytes
    if (pos >= bytes.size()) break;
    const std::uint8_t marker = bytes[pos++];
    if (marker == 0xD9 || marker == 0xDA) break;  // EOI / start of scan
    if (marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) continue;  // no payload
    if (bytes.size() - pos < 2) detail::malformed("segment length truncated");
    const std::size_t length = (static_cast<std::size_t>(bytes[pos]) << 8) | bytes[pos + 1];
    if (length < 2 || length > bytes.size() - pos) {
      detail::malformed("segment length " + std::to_string(length) + " exceeds file");
    }
    const auto payload = bytes.subspan(pos + 2, length - 2);
    static constexpr std::uint8_t kExifHeader[6] = {'E', 'x', 'i', 'f', 0, 0};
    if (marker == 0xE1 && payload.size() >= 6 &&
        std::equal(payload.begin(), payload.begin() + 6, kExifHeader)) {
      return detail::parse_tiff(payload.subspan(6));
    }
    pos += length;
  }
  return {};
}

}  // namespace beachseg
