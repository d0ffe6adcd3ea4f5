#pragma once

// 8-bit PNG and JPEG encode/decode on top of libpng and libjpeg.

#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "beachseg/error.hpp"
#include "beachseg/raster.hpp"

namespace beachseg {

enum class ImageFormat { Png, Jpeg, Unknown };

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path,
                             std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                   text.size()));
}

inline std::string read_file_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0) return ImageFormat::Png;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return ImageFormat::Jpeg;
  }
  return ImageFormat::Unknown;
}

// ---------------------------------------------------------------- PNG

inline RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::Io, std::string("png decode: ") + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  // Alpha, if any, is composited over black.
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&image, &black, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorKind::Io, std::string("png decode: ") + image.message);
  }
  return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                     std::move(pixels));
}

inline std::vector<std::uint8_t> encode_png(const RasterImage& raster) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  image.format = raster.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.data().data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.data().data(), 0,
                                 nullptr)) {
    throw Error(ErrorKind::Io, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

// ---------------------------------------------------------------- JPEG

namespace detail {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

extern "C" inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

extern "C" inline void jpeg_silent_output(j_common_ptr) {}

// Only PODs and caller-owned objects are touched between setjmp and a
// possible longjmp.
inline bool jpeg_decode_into(std::span<const std::uint8_t> bytes, bool header_only,
                             std::vector<std::uint8_t>& pixels, int& width, int& height,
                             int& channels, char (&message)[JMSG_LENGTH_MAX]) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = jpeg_silent_output;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::memcpy(message, err.message, sizeof message);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  width = static_cast<int>(cinfo.image_width);
  height = static_cast<int>(cinfo.image_height);
  channels = cinfo.num_components == 1 ? 1 : 3;
  if (header_only) {
    jpeg_destroy_decompress(&cinfo);
    return true;
  }
  jpeg_start_decompress(&cinfo);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) *
                             static_cast<std::size_t>(cinfo.output_components);
  pixels.resize(stride * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

inline bool jpeg_encode_into(const RasterImage& raster, int quality,
                             std::vector<std::uint8_t>& out, char (&message)[JMSG_LENGTH_MAX]) {
  jpeg_compress_struct cinfo;
  JpegErrorManager err;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  err.pub.output_message = jpeg_silent_output;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    std::memcpy(message, err.message, sizeof message);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(raster.width());
  cinfo.image_height = static_cast<JDIMENSION>(raster.height());
  cinfo.input_components = raster.channels();
  cinfo.in_color_space = raster.channels() == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto row_span = raster.row(static_cast<int>(cinfo.next_scanline));
    JSAMPROW row = const_cast<JSAMPLE*>(row_span.data());
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  out.assign(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return true;
}

}  // namespace detail

inline RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> pixels;
  int width = 0, height = 0, channels = 0;
  char message[JMSG_LENGTH_MAX] = {};
  if (!detail::jpeg_decode_into(bytes, false, pixels, width, height, channels, message)) {
    throw Error(ErrorKind::Io, std::string("jpeg decode: ") + message);
  }
  return RasterImage(width, height, channels, std::move(pixels));
}

inline std::vector<std::uint8_t> encode_jpeg(const RasterImage& raster, int quality = 95) {
  std::vector<std::uint8_t> out;
  char message[JMSG_LENGTH_MAX] = {};
  if (!detail::jpeg_encode_into(raster, quality, out, message)) {
    throw Error(ErrorKind::Io, std::string("jpeg encode: ") + message);
  }
  return out;
}

// ---------------------------------------------------------------- files

struct ImageSize {
  int width = 0;
  int height = 0;
};

inline ImageSize probe_image_size(std::span<const std::uint8_t> bytes) {
  switch (sniff_format(bytes)) {
    case ImageFormat::Png: {
      png_image image;
      std::memset(&image, 0, sizeof image);
      image.version = PNG_IMAGE_VERSION;
      if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw Error(ErrorKind::Io, std::string("png header: ") + image.message);
      }
      ImageSize size{static_cast<int>(image.width), static_cast<int>(image.height)};
      png_image_free(&image);
      return size;
    }
    case ImageFormat::Jpeg: {
      std::vector<std::uint8_t> unused;
      int width = 0, height = 0, channels = 0;
      char message[JMSG_LENGTH_MAX] = {};
      if (!detail::jpeg_decode_into(bytes, true, unused, width, height, channels, message)) {
        throw Error(ErrorKind::Io, std::string("jpeg header: ") + message);
      }
      return {width, height};
    }
    case ImageFormat::Unknown: break;
  }
  throw Error(ErrorKind::Io, "unrecognized image format");
}

inline RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  switch (sniff_format(bytes)) {
    case ImageFormat::Png: return decode_png(bytes);
    case ImageFormat::Jpeg: return decode_jpeg(bytes);
    case ImageFormat::Unknown: break;
  }
  throw Error(ErrorKind::Io, "unrecognized image format");
}

inline RasterImage read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

/// Format follows the extension: .jpg/.jpeg write JPEG, anything else PNG.
inline void write_image(const std::filesystem::path& path, const RasterImage& raster) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".jpg" || ext == ".jpeg") {
    write_file_bytes(path, encode_jpeg(raster));
  } else {
    write_file_bytes(path, encode_png(raster));
  }
}

}  // namespace beachseg
