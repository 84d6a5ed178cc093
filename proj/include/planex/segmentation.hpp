#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "planex/types.hpp"

namespace planex {

using Label = std::uint32_t;

/// Plane parameters as stored alongside a label image: n·x = offset.
/// Ground-truth segmentations may lack geometry.
struct PlaneRecord {
  Vec3 normal = Vec3::Zero();
  double offset = 0.0;
  std::size_t member_count = 0;
  bool has_geometry = false;

  PlaneGeometry geometry() const { return {offset * normal, normal}; }
  bool operator==(const PlaneRecord&) const = default;
};

/// Per-pixel plane labels (0 = unlabeled / outlier) plus plane parameters.
struct Segmentation {
  int width = 0;
  int height = 0;
  std::vector<Label> labels;
  std::map<Label, PlaneRecord> planes;

  Segmentation() = default;
  Segmentation(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t size() const noexcept { return labels.size(); }

  /// Rebuilds member counts from the labels, adding geometry-less records
  /// for labels that have none and dropping records for absent labels.
  void sync_planes();

  /// Throws InvalidArgument if a nonzero label lacks a record or a member
  /// count disagrees with the pixel count.
  void validate() const;

  bool operator==(const Segmentation&) const = default;
};

/// Segmentation with geometry-less plane records built from labels alone.
Segmentation segmentation_from_labels(int width, int height, std::vector<Label> labels);

}  // namespace planex
