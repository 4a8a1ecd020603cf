#include "documents.hpp"

#include <json.hpp>

#include "errors.hpp"

namespace spikeyolo {

using ojson = nlohmann::ordered_json;

std::string detections_to_json(std::string_view frame_id, std::span<const Detection> detections) {
  ojson doc;
  doc["frame_id"] = std::string(frame_id);
  doc["boxes"] = ojson::array();
  for (const Detection& d : detections) {
    ojson b;
    b["class"] = class_name(d.class_id);
    b["objectness"] = d.objectness;
    b["x_m"] = d.x_m;
    b["y_m"] = d.y_m;
    b["w_m"] = d.w_m;
    b["l_m"] = d.l_m;
    b["yaw_rad"] = d.b_theta;
    doc["boxes"].push_back(std::move(b));
  }
  return doc.dump(2) + "\n";
}

std::string ground_truth_to_json(std::string_view frame_id, std::span<const GroundTruthBox> boxes) {
  ojson doc;
  doc["frame_id"] = std::string(frame_id);
  doc["boxes"] = ojson::array();
  for (const GroundTruthBox& g : boxes) {
    ojson b;
    b["class"] = class_name(g.class_id);
    b["x_m"] = g.cx;
    b["y_m"] = g.cy;
    b["w_m"] = g.width;
    b["l_m"] = g.length;
    b["yaw_rad"] = g.yaw;
    doc["boxes"].push_back(std::move(b));
  }
  return doc.dump(2) + "\n";
}

BoxDocument parse_box_document(std::string_view text) {
  BoxDocument out;
  try {
    const ojson doc = ojson::parse(text);
    out.frame_id = doc.at("frame_id").get<std::string>();
    for (const ojson& b : doc.at("boxes")) {
      ScoredBox s;
      s.class_id = class_id_from_name(b.at("class").get<std::string>());
      s.score = b.contains("objectness") ? b.at("objectness").get<double>() : 1.0;
      s.box = OrientedBox{b.at("x_m").get<double>(), b.at("y_m").get<double>(), b.at("w_m").get<double>(),
                          b.at("l_m").get<double>(), b.at("yaw_rad").get<double>()};
      if (!(s.box.width > 0.0) || !(s.box.length > 0.0))
        fail(ErrorCode::InvalidArgument, "box width and length must be positive");
      out.boxes.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed box document: ") + e.what());
  }
  return out;
}

std::string energy_report_to_json(const EnergyReport& report) {
  ojson doc;
  doc["per_spike_energy_j"] = report.per_spike_energy;
  doc["layers"] = ojson::array();
  for (const EnergyLayerRow& r : report.layers) {
    ojson row;
    row["layer"] = r.layer_index;
    row["fired"] = r.fired;
    row["silent"] = r.silent;
    row["sparsity"] = r.sparsity;
    doc["layers"].push_back(std::move(row));
  }
  doc["fired_total"] = report.fired_total;
  doc["silent_total"] = report.silent_total;
  doc["sparsity_total"] = report.sparsity_total;
  doc["energy_j"] = report.energy_joules;
  return doc.dump(2) + "\n";
}

std::string eval_to_json(std::span<const ClassAp> results, std::span<const std::string> warnings) {
  ojson doc;
  doc["metric"] = "ap11_bev";
  doc["classes"] = ojson::array();
  for (const ClassAp& r : results) {
    ojson c;
    c["class"] = class_name(r.class_id);
    c["ap"] = r.ap;
    c["ground_truth"] = r.gt_count;
    c["detections"] = r.det_count;
    doc["classes"].push_back(std::move(c));
  }
  doc["warnings"] = ojson::array();
  for (const std::string& w : warnings) doc["warnings"].push_back(w);
  return doc.dump(2) + "\n";
}

}  // namespace spikeyolo
