#include "icsv/serialize.hpp"

namespace icsv {

Json box_to_json(const Box& b) { return Json::array({b.x0, b.y0, b.x1, b.y1}); }

Box box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("bad bbox in JSON");
  return Box{j[0], j[1], j[2], j[3]};
}

Json error_log_to_json(const ErrorLog& log) {
  Json arr = Json::array();
  for (const auto& e : log.entries)
    arr.push_back({{"kind", error_kind_name(e.kind)}, {"bbox", box_to_json(e.bbox)}});
  return arr;
}

ErrorLog error_log_from_json(const Json& j) {
  ErrorLog log;
  for (const auto& e : j)
    log.entries.push_back({parse_error_kind(e.at("kind")), box_from_json(e.at("bbox"))});
  return log;
}

Json report_to_json(const ErrorReport& report) {
  Json j;
  j["image"] = report.image_id;
  Json verdicts = Json::array();
  for (const auto& v : report.patch_verdicts)
    verdicts.push_back({{"x", v.x}, {"y", v.y}, {"p", v.p}, {"n", v.n}});
  j["patch_verdicts"] = verdicts;
  Json boxes = Json::array();
  for (const auto& b : report.error_boxes) boxes.push_back(box_to_json(b));
  j["error_boxes"] = boxes;

  Json extra = Json::array(), miss = Json::array();
  for (const auto& d : report.detections) {
    Json entry = {{"bbox", box_to_json(d.bbox)}, {"mean", d.score}};
    if (d.kind == ErrorKind::ViaExtra)
      extra.push_back(entry);
    else if (d.kind == ErrorKind::ViaMiss)
      miss.push_back(entry);
  }
  j["extra"] = extra;
  j["miss"] = miss;
  j["vwb"] = {{"v", report.v}, {"w", report.w}, {"b", report.b},
              {"low_contrast", report.low_contrast}};
  return j;
}

ErrorReport report_from_json(const Json& j) {
  ErrorReport report;
  report.image_id = j.at("image");
  for (const auto& v : j.at("patch_verdicts"))
    report.patch_verdicts.push_back(
        {v.at("x"), v.at("y"), v.at("p").get<float>(), v.at("n").get<float>()});
  for (const auto& b : j.at("error_boxes")) report.error_boxes.push_back(box_from_json(b));
  for (const auto& e : j.at("extra"))
    report.detections.push_back({ErrorKind::ViaExtra, box_from_json(e.at("bbox")), e.at("mean")});
  for (const auto& e : j.at("miss"))
    report.detections.push_back({ErrorKind::ViaMiss, box_from_json(e.at("bbox")), e.at("mean")});
  const auto& vwb = j.at("vwb");
  report.v = vwb.at("v");
  report.w = vwb.at("w");
  report.b = vwb.at("b");
  report.low_contrast = vwb.at("low_contrast");
  return report;
}

Json score_to_json(const PRScore& score) {
  return {{"tp", score.tp},         {"fp", score.fp},
          {"fn", score.fn},         {"recall", score.recall},
          {"precision", score.precision}, {"recall_defined", score.recall_defined},
          {"precision_defined", score.precision_defined}};
}

}  // namespace icsv
