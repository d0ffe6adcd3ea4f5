#pragma once

// Outputs are written into a hidden staging directory next to their final
// destination and moved into place only on commit(). If the owner goes out
// of scope without committing, the staging area is removed and the
// destination is left untouched.

#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "beachseg/error.hpp"

namespace beachseg {

class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path destination)
      : destination_(std::move(destination)) {
    auto parent = destination_.parent_path();
    if (parent.empty()) parent = ".";
    staging_ = parent / ("." + destination_.filename().string() + ".staging-" +
                         std::to_string(::getpid()));
    std::error_code ec;
    std::filesystem::remove_all(staging_, ec);
    std::filesystem::create_directories(staging_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + staging_.string() + ": " + ec.message());
  }

  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  ~StagedDirectory() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(staging_, ec);
    }
  }

  const std::filesystem::path& destination() const noexcept { return destination_; }

  /// Path inside the staging area; parent directories are created.
  std::filesystem::path path(const std::filesystem::path& relative) const {
    const auto p = staging_ / relative;
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + p.parent_path().string());
    return p;
  }

  void commit() {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(staging_)) {
      if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), staging_));
    }
    std::error_code ec;
    fs::create_directories(destination_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + destination_.string());
    for (const auto& rel : files) {
      const auto target = destination_ / rel;
      fs::create_directories(target.parent_path(), ec);
      fs::rename(staging_ / rel, target, ec);
      if (ec) throw Error(ErrorKind::Io, "cannot move output into " + target.string());
    }
    fs::remove_all(staging_, ec);
    committed_ = true;
  }

 private:
  std::filesystem::path destination_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

/// Single-file variant: write to path(), then commit() renames over the
/// destination.
class StagedFile {
 public:
  explicit StagedFile(std::filesystem::path destination) : destination_(std::move(destination)) {
    staging_ = destination_;
    staging_ += ".staging-" + std::to_string(::getpid());
    std::error_code ec;
    if (destination_.has_parent_path()) {
      std::filesystem::create_directories(destination_.parent_path(), ec);
    }
    if (ec) throw Error(ErrorKind::Io, "cannot create " + destination_.parent_path().string());
  }
  StagedFile(const StagedFile&) = delete;
  StagedFile& operator=(const StagedFile&) = delete;
  ~StagedFile() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove(staging_, ec);
    }
  }

  const std::filesystem::path& path() const noexcept { return staging_; }

  void commit() {
    std::error_code ec;
    if (destination_.has_parent_path()) {
      std::filesystem::create_directories(destination_.parent_path(), ec);
    }
    std::filesystem::rename(staging_, destination_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot move output into " + destination_.string());
    committed_ = true;
  }

 private:
  std::filesystem::path destination_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

}  // namespace beachseg
