#pragma once

#include "poselift/pose.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace poselift {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One frame: 2D keypoints in pixels, optional 3D joints in millimeters.
struct FrameRecord {
  std::string seq_id;
  long t = 0;
  Pose2D joints2d;
  std::optional<Pose3D> joints3d;
  std::optional<std::vector<bool>> visibility;

  bool operator==(const FrameRecord&) const = default;
};

struct Sequence {
  std::string id;
  std::vector<FrameRecord> frames;

  bool operator==(const Sequence&) const = default;
};

struct SequenceDataset {
  int k = 0;
  std::vector<std::string> joint_names;
  std::string units_2d = "px";
  std::string units_3d = "mm";
  std::vector<Sequence> sequences;

  std::size_t frame_count() const;
  // True when every frame carries 3D joints.
  bool fully_3d() const;
  // Throws FormatError on any broken invariant.
  void validate() const;

  bool operator==(const SequenceDataset&) const = default;
};

// JSON Lines: a header {"k","joint_names","units_2d","units_3d"} followed by
// one {"seq_id","t","joints2d"[,"joints3d"][,"visibility"]} object per frame.
// Frames of one sequence may not be interleaved with another's.
SequenceDataset load_dataset(const std::filesystem::path& path);
SequenceDataset parse_dataset(std::istream& in);
void save_dataset(const SequenceDataset& ds, const std::filesystem::path& path);
void write_dataset(const SequenceDataset& ds, std::ostream& out);

}  // namespace poselift
