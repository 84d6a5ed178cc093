#include "planex/segmentation.hpp"

#include <string>

namespace planex {

void Segmentation::sync_planes() {
  std::map<Label, std::size_t> counts;
  for (const Label l : labels) {
    if (l != 0) ++counts[l];
  }
  std::map<Label, PlaneRecord> synced;
  for (const auto& [label, count] : counts) {
    PlaneRecord record;
    if (const auto it = planes.find(label); it != planes.end()) record = it->second;
    record.member_count = count;
    synced.emplace(label, record);
  }
  planes = std::move(synced);
}

void Segmentation::validate() const {
  if (labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::InvalidArgument, "label count does not match dimensions");
  }
  std::map<Label, std::size_t> counts;
  for (const Label l : labels) {
    if (l != 0) ++counts[l];
  }
  for (const auto& [label, count] : counts) {
    const auto it = planes.find(label);
    if (it == planes.end()) {
      throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(label) + " has no plane");
    }
    if (it->second.member_count != count) {
      throw Error(ErrorCode::InvalidArgument,
                  "member count of label " + std::to_string(label) + " disagrees with pixels");
    }
  }
}

Segmentation segmentation_from_labels(int width, int height, std::vector<Label> labels) {
  Segmentation seg;
  seg.width = width;
  seg.height = height;
  seg.labels = std::move(labels);
  if (seg.labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "label count does not match dimensions");
  }
  seg.sync_planes();
  return seg;
}

}  // namespace planex
