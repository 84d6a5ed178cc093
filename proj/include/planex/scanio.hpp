#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "planex/segmentation.hpp"
#include "planex/types.hpp"

namespace planex {

// Paths ending in ".gz" are read and written through gzip.

/// Text scan format:
///   opc 1
///   <width> <height>
///   <origin x> <origin y> <origin z>
///   <sigma>
///   <row> <col> <x> <y> <z> <valid>      (width*height lines, row-major)
/// Floats use 17 significant digits; invalid pixels store 0 0 0.
std::string format_scan(const OrganizedScan& scan);
OrganizedScan parse_scan(const std::string& text);
void save_scan(const OrganizedScan& scan, const std::string& path);
OrganizedScan load_scan(const std::string& path);

/// Labels as a plain PGM ("P2") with maxval = max(1, largest label).
std::string format_labels(const Segmentation& seg);
/// Geometry-less plane records are created for every label.
Segmentation parse_labels(const std::string& text);
void save_labels(const Segmentation& seg, const std::string& path);
Segmentation load_labels(const std::string& path);

/// One line per plane with geometry: <id> <nx> <ny> <nz> <offset> <count>,
/// for the plane n·x = offset. Lines starting with '#' are comments.
std::string format_planes(const Segmentation& seg);
/// Attaches the listed planes to `seg`. Throws ParseError on malformed
/// lines, non-unit normals, unknown ids or counts that disagree with the
/// labels.
void parse_planes(const std::string& text, Segmentation& seg);
void save_planes(const Segmentation& seg, const std::string& path);
void load_planes(const std::string& path, Segmentation& seg);

/// Labels plus optional plane list (empty path skips it).
Segmentation load_segmentation(const std::string& labels_path, const std::string& planes_path);

/// Throws DimensionMismatch unless the segmentation matches the scan grid.
void check_dimensions(const OrganizedScan& scan, const Segmentation& seg);

/// Deterministic color of a label; label 0 is black.
std::array<std::uint8_t, 3> label_color(Label label);
/// Writes the label map as an 8-bit RGB PNG.
void save_label_png(const Segmentation& seg, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);

}  // namespace planex
