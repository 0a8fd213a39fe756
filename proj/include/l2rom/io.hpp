// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "l2rom/certify.hpp"
#include "l2rom/models.hpp"
#include "l2rom/optimize.hpp"

namespace l2rom::io {

/// The file system refused a read, write or rename.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its contents are not a valid container.
class FormatError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Kind { model, samples, rom, certificate, trace };

inline constexpr int kFormatVersion = 1;

std::string_view kind_name(Kind k);

using Model = std::variant<AffineLtiFom, AffineStationaryFom, KronParametricFom>;

/// A certificate together with the files it was computed from.
struct CertificateFile {
  Certificate certificate;
  std::string data_path;
  std::string rom_path;
};

/// Writes `contents` to a temporary sibling of `path` and renames it into place.
void write_text_atomic(const std::filesystem::path& path, std::string_view contents);

/// Reads the `kind` field after checking the version.
Kind read_kind(const std::filesystem::path& path);

void write_model(const std::filesystem::path& path, const Model& model);
Model read_model(const std::filesystem::path& path);

void write_samples(const std::filesystem::path& path, const SampleSet& samples);
SampleSet read_samples(const std::filesystem::path& path);

void write_rom(const std::filesystem::path& path, const StructuredRom& rom);
StructuredRom read_rom(const std::filesystem::path& path);

void write_certificate(const std::filesystem::path& path, const CertificateFile& cert);
CertificateFile read_certificate(const std::filesystem::path& path);

/// The trace file also stores the final rom.
void write_trace(const std::filesystem::path& path, const FitTrace& trace);
FitTrace read_trace(const std::filesystem::path& path);

std::string_view structure_name(RomStructure s);
RomStructure parse_structure(std::string_view name);

}  // namespace l2rom::io
