#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detection.hpp"
#include "energy.hpp"
#include "evalkit.hpp"

namespace spikeyolo {

// Box documents (detections and ground truth share one schema):
// {"frame_id": ..., "boxes": [{"class", "objectness", "x_m", "y_m", "w_m",
// "l_m", "yaw_rad"}, ...]}; keys always in this order. Ground-truth files may
// omit "objectness".
std::string detections_to_json(std::string_view frame_id, std::span<const Detection> detections);
std::string ground_truth_to_json(std::string_view frame_id, std::span<const GroundTruthBox> boxes);

struct BoxDocument {
  std::string frame_id;
  std::vector<ScoredBox> boxes;
};

// Throws InvalidArgument on malformed documents.
BoxDocument parse_box_document(std::string_view text);

std::string energy_report_to_json(const EnergyReport& report);

std::string eval_to_json(std::span<const ClassAp> results, std::span<const std::string> warnings);

}  // namespace spikeyolo
