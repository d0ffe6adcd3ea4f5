#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "beachseg/exif.hpp"
#include "beachseg/image_io.hpp"
#include "support/fixtures.hpp"

using namespace beachseg;
using beachseg::testing::flight_tiff;
using beachseg::testing::TiffBuilder;
using beachseg::testing::TiffEntry;
using beachseg::testing::with_exif;

namespace {

std::vector<std::uint8_t> small_jpeg() {
  std::mt19937_64 rng(1);
  return encode_jpeg(beachseg::testing::random_image(rng, 8, 8, 3));
}

ErrorKind kind_of(const std::vector<std::uint8_t>& bytes) {
  try {
    parse_exif(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;  // sentinel: no error
}

}  // namespace

TEST(Exif, FlightFixtureLittleEndian) {
  const auto meta = parse_exif(with_exif(small_jpeg(), flight_tiff(true)));
  ASSERT_TRUE(meta.latitude && meta.longitude && meta.altitude);
  EXPECT_NEAR(*meta.latitude, 14.8, 1e-12);
  EXPECT_NEAR(*meta.longitude, -17.3, 1e-12);
  EXPECT_EQ(*meta.altitude, 10.0);
  EXPECT_EQ(meta.altitude_ref, std::uint8_t{0});
  EXPECT_EQ(meta.shutter, (Rational{1, 500}));
  EXPECT_EQ(meta.aperture, (Rational{28, 10}));
  EXPECT_EQ(meta.iso, 100u);
}

TEST(Exif, BigEndianDecodesIdentically) {
  const auto jpeg = small_jpeg();
  EXPECT_EQ(parse_exif(with_exif(jpeg, flight_tiff(false))),
            parse_exif(with_exif(jpeg, flight_tiff(true))));
}

TEST(Exif, NoApp1GivesEmptyRecord) {
  EXPECT_TRUE(parse_exif(small_jpeg()).empty());
}

TEST(Exif, NonJpegRejected) {
  const std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  EXPECT_EQ(kind_of(png), ErrorKind::NotJpeg);
  EXPECT_EQ(kind_of({}), ErrorKind::NotJpeg);
}

TEST(Exif, TruncatedMidIfdIsMalformed) {
  auto tiff = flight_tiff(true);
  tiff.resize(20);  // header + part of IFD0
  EXPECT_EQ(kind_of(with_exif(small_jpeg(), tiff)), ErrorKind::MalformedExif);
}

TEST(Exif, SegmentLengthPastEndIsMalformed) {
  std::vector<std::uint8_t> bytes = {0xFF, 0xD8, 0xFF, 0xE1, 0x40, 0x00, 'E', 'x'};
  EXPECT_EQ(kind_of(bytes), ErrorKind::MalformedExif);
}

TEST(Exif, SouthEastHemispheres) {
  TiffBuilder b(true);
  const auto tiff = b.build({}, {},
                            {b.ascii(1, "S"), b.rational(2, {{33, 1}, {52, 1}, {4, 1}}),
                             b.ascii(3, "E"), b.rational(4, {{151, 1}, {12, 1}, {36, 1}}),
                             b.byte_value(5, 1), b.rational(6, {{255, 10}})});
  const auto meta = parse_exif(with_exif(small_jpeg(), tiff));
  EXPECT_NEAR(*meta.latitude, -(33 + 52 / 60.0 + 4 / 3600.0), 1e-12);
  EXPECT_NEAR(*meta.longitude, 151 + 12 / 60.0 + 36 / 3600.0, 1e-12);
  EXPECT_EQ(*meta.altitude, -25.5);
  EXPECT_EQ(meta.altitude_ref, std::uint8_t{1});
  EXPECT_FALSE(meta.shutter);
  EXPECT_FALSE(meta.iso);
}

TEST(Exif, UnknownTagsIgnored) {
  TiffBuilder b(false);
  TiffEntry maker{0x927C, 7, 9, {1, 2, 3, 4, 5, 6, 7, 8, 9}};
  TiffEntry odd_type{0x9999, 42, 3, {0, 0, 0, 0}};
  const auto tiff =
      b.build({b.ascii(0x010F, "DJI"), odd_type}, {maker, b.short_value(0x8827, 400)}, {});
  const auto meta = parse_exif(with_exif(small_jpeg(), tiff));
  EXPECT_EQ(meta.iso, 400u);
  EXPECT_FALSE(meta.latitude);
}

TEST(Exif, ZeroDenominatorIsAbsent) {
  TiffBuilder b(true);
  const auto tiff = b.build({}, {b.rational(0x829A, {{1, 0}})}, {});
  EXPECT_FALSE(parse_exif(with_exif(small_jpeg(), tiff)).shutter);
}

TEST(Exif, OutOfRangeLatitudeIsMalformed) {
  TiffBuilder b(true);
  const auto tiff =
      b.build({}, {}, {b.ascii(1, "N"), b.rational(2, {{91, 1}, {0, 1}, {0, 1}})});
  EXPECT_EQ(kind_of(with_exif(small_jpeg(), tiff)), ErrorKind::MalformedExif);
}

TEST(Exif, SkipsOtherSegmentsBeforeExif) {
  const auto jpeg = small_jpeg();
  auto with = with_exif(jpeg, flight_tiff(true));
  // Insert an APP0 segment ahead of APP1.
  const std::vector<std::uint8_t> app0 = {0xFF, 0xE0, 0x00, 0x06, 'J', 'F', 'X', 0};
  with.insert(with.begin() + 2, app0.begin(), app0.end());
  EXPECT_NEAR(*parse_exif(with).latitude, 14.8, 1e-12);
}

TEST(Exif, DmsRoundTripWithinHalfArcSecond) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(0.0, 180.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = d(rng);
    const Dms dms = decimal_to_dms(x);
    EXPECT_GE(dms.minutes, 0.0);
    EXPECT_LT(dms.minutes, 60.0);
    const double back = dms_to_decimal(dms.degrees, dms.minutes, dms.seconds);
    ASSERT_LE(std::fabs(back - x) * 3600.0, 0.5);
    const Dms again = decimal_to_dms(back);
    ASSERT_LE(std::fabs(dms_to_decimal(again.degrees, again.minutes, again.seconds) - x) * 3600.0,
              0.5);
  }
}

// Mutations must yield MalformedExif or a valid record, never anything else.
// Each mutant lives in an exact-size buffer so sanitizer builds trap any
// read past the end.
TEST(Exif, MutationFuzz) {
  const auto base = with_exif(small_jpeg(), flight_tiff(true));
  const auto base_be = with_exif(small_jpeg(), flight_tiff(false));
  std::mt19937_64 rng(2024);
  int malformed = 0, valid = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::vector<std::uint8_t> m = iter % 2 ? base : base_be;
    const int edits = 1 + static_cast<int>(rng() % 8);
    // Mutations concentrate on the APP1 header and TIFF block.
    const std::size_t span = std::min<std::size_t>(m.size(), 200);
    for (int k = 0; k < edits; ++k) {
      const std::size_t at = rng() % span;
      switch (rng() % 4) {
        case 0: m[at] = static_cast<std::uint8_t>(rng()); break;
        case 1: m[at] ^= static_cast<std::uint8_t>(1u << (rng() % 8)); break;
        case 2: m[at] = (rng() % 2) ? 0xFF : 0x00; break;
        case 3: m.resize(std::max<std::size_t>(2, at)); break;
      }
    }
    std::vector<std::uint8_t> exact(m.begin(), m.end());
    exact.shrink_to_fit();
    try {
      const auto meta = parse_exif(std::span<const std::uint8_t>(exact.data(), exact.size()));
      if (meta.latitude) { ASSERT_LE(std::fabs(*meta.latitude), 90.0); }
      if (meta.longitude) { ASSERT_LE(std::fabs(*meta.longitude), 180.0); }
      if (meta.shutter) { ASSERT_NE(meta.shutter->denominator, 0u); }
      if (meta.aperture) { ASSERT_NE(meta.aperture->denominator, 0u); }
      ++valid;
    } catch (const Error& e) {
      ASSERT_TRUE(e.kind() == ErrorKind::MalformedExif || e.kind() == ErrorKind::NotJpeg)
          << e.what();
      ++malformed;
    }
  }
  EXPECT_GT(valid, 0);
  EXPECT_GT(malformed, 0);
}
