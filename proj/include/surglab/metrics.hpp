#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace surglab {

// Axis-aligned box with x1 < x2 and y1 < y2.
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

// All metric values are percentages in [0, 100]. The map keeps a stable key
// order for deterministic serialization.
struct MetricReport {
    std::string task;
    std::map<std::string, double> metrics;
};

struct LabelRecord {
    std::string id;
    std::string pred;
    std::string truth;
};

// Prediction and truth are sets of "instrument verb target" strings.
struct TripletRecord {
    std::string id;
    std::vector<std::string> pred;
    std::vector<std::string> truth;
};

// Three binary criterion judgments per frame.
struct CvsRecord {
    std::string id;
    std::array<bool, 3> pred{};
    std::array<bool, 3> truth{};
};

struct BoxRecord {
    std::string id;
    std::optional<Box> pred;  // missing prediction scores IoU 0
    Box truth;
};

enum class CvsOverallMode { kJointPool, kAllThreePerFrame };

// Accuracy plus macro precision / recall / Jaccard over the declared class
// list. Macro recall and Jaccard average over classes present in ground
// truth; macro precision additionally includes predicted-only classes at
// precision zero. Unknown labels are rejected with the offending record id.
MetricReport classification_metrics(const std::vector<LabelRecord>& records,
                                    const std::vector<std::string>& class_list);

// Exact set-match accuracies for instrument / verb / target / full triplet
// plus categorical mAP for each. Categorical mAP ranks one-hot confidences
// (predicted = 1) with a stable id tie-break, computes per-class interpolated
// AP over that two-level ranking, and macro-averages over classes present in
// ground truth.
MetricReport triplet_metrics(const std::vector<TripletRecord>& records);

// Per-criterion accuracies, their mean (avg), and overall. Overall defaults
// to the joint pool of all criterion judgments; the all-three-per-frame
// reading is available behind the mode flag.
MetricReport cvs_scores(const std::vector<CvsRecord>& records,
                        CvsOverallMode mode = CvsOverallMode::kJointPool);

// Intersection over union in [0, 1]; rejects degenerate boxes.
double iou(const Box& a, const Box& b);

// mIoU, AP at the 0.50 and 0.75 thresholds, and COCOAP (mean AP over
// thresholds 0.50:0.05:0.95). With one box per query AP@t reduces to the
// fraction of queries with IoU >= t.
MetricReport localization_metrics(const std::vector<BoxRecord>& records);

}  // namespace surglab
