#include "surglab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace surglab {

namespace {

constexpr double kPct = 100.0;

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::array<std::string, 3> parse_triplet(const std::string& s, const std::string& id) {
    std::istringstream in(s);
    std::array<std::string, 3> parts;
    std::string extra;
    if (!(in >> parts[0] >> parts[1] >> parts[2]) || (in >> extra))
        throw std::invalid_argument("malformed triplet string \"" + s + "\" in record " + id);
    return parts;
}

// Interpolated AP for one class over the two-level categorical ranking:
// confidence-one records first, each level ordered by id.
double categorical_ap(const std::vector<std::pair<bool, bool>>& ranked) {
    // ranked: (predicted, positive) already in ranking order
    std::size_t n_pos = 0;
    for (const auto& [pred, pos] : ranked) n_pos += pos ? 1 : 0;
    if (n_pos == 0) return 0.0;

    std::vector<double> precision(ranked.size());
    std::size_t tp = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        tp += ranked[k].second ? 1 : 0;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    // suffix max for interpolation
    for (std::size_t k = ranked.size(); k-- > 1;)
        precision[k - 1] = std::max(precision[k - 1], precision[k]);

    double ap = 0.0;
    for (std::size_t k = 0; k < ranked.size(); ++k)
        if (ranked[k].second) ap += precision[k];
    return ap / static_cast<double>(n_pos);
}

// Sorted by (not predicted, id): all predicted records precede unpredicted
// ones, ids break ties within each level.
double class_ap(const std::vector<std::pair<std::string, std::pair<bool, bool>>>& items) {
    auto sorted = items;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first;
        return a.first < b.first;
    });
    std::vector<std::pair<bool, bool>> ranked;
    ranked.reserve(sorted.size());
    for (const auto& it : sorted) ranked.push_back(it.second);
    return categorical_ap(ranked);
}

using StringSet = std::set<std::string>;

double set_match_accuracy(const std::vector<std::pair<StringSet, StringSet>>& sets) {
    std::size_t correct = 0;
    for (const auto& [pred, truth] : sets) correct += pred == truth ? 1 : 0;
    return kPct * safe_div(static_cast<double>(correct), static_cast<double>(sets.size()));
}

double macro_map(const std::vector<std::pair<StringSet, StringSet>>& sets,
                 const std::vector<std::string>& ids) {
    StringSet gt_classes;
    for (const auto& [pred, truth] : sets) gt_classes.insert(truth.begin(), truth.end());
    if (gt_classes.empty()) return 0.0;
    double total = 0.0;
    for (const auto& cls : gt_classes) {
        std::vector<std::pair<std::string, std::pair<bool, bool>>> items;
        items.reserve(sets.size());
        for (std::size_t i = 0; i < sets.size(); ++i)
            items.push_back({ids[i], {sets[i].first.count(cls) > 0, sets[i].second.count(cls) > 0}});
        total += class_ap(items);
    }
    return kPct * total / static_cast<double>(gt_classes.size());
}

}  // namespace

MetricReport classification_metrics(const std::vector<LabelRecord>& records,
                                    const std::vector<std::string>& class_list) {
    if (records.empty()) throw std::invalid_argument("classification_metrics: no records");
    const StringSet known(class_list.begin(), class_list.end());
    for (const auto& r : records) {
        if (known.count(r.truth) == 0)
            throw std::invalid_argument("unknown truth label \"" + r.truth + "\" in record " + r.id);
        if (known.count(r.pred) == 0)
            throw std::invalid_argument("unknown predicted label \"" + r.pred + "\" in record " +
                                        r.id);
    }

    std::map<std::string, std::size_t> tp, fp, fn;
    std::size_t correct = 0;
    StringSet gt_classes, pred_classes;
    for (const auto& r : records) {
        gt_classes.insert(r.truth);
        pred_classes.insert(r.pred);
        if (r.pred == r.truth) {
            ++correct;
            ++tp[r.truth];
        } else {
            ++fp[r.pred];
            ++fn[r.truth];
        }
    }

    auto count = [](const std::map<std::string, std::size_t>& m, const std::string& k) {
        const auto it = m.find(k);
        return it == m.end() ? 0.0 : static_cast<double>(it->second);
    };

    StringSet precision_classes = gt_classes;
    precision_classes.insert(pred_classes.begin(), pred_classes.end());

    double macro_p = 0.0;
    for (const auto& c : precision_classes)
        macro_p += safe_div(count(tp, c), count(tp, c) + count(fp, c));
    macro_p /= static_cast<double>(precision_classes.size());

    double macro_r = 0.0, macro_j = 0.0;
    for (const auto& c : gt_classes) {
        macro_r += safe_div(count(tp, c), count(tp, c) + count(fn, c));
        macro_j += safe_div(count(tp, c), count(tp, c) + count(fp, c) + count(fn, c));
    }
    macro_r /= static_cast<double>(gt_classes.size());
    macro_j /= static_cast<double>(gt_classes.size());

    MetricReport report;
    report.task = "classification";
    report.metrics["accuracy"] = kPct * static_cast<double>(correct) / records.size();
    report.metrics["macro_precision"] = kPct * macro_p;
    report.metrics["macro_recall"] = kPct * macro_r;
    report.metrics["macro_jaccard"] = kPct * macro_j;
    return report;
}

MetricReport triplet_metrics(const std::vector<TripletRecord>& records) {
    if (records.empty()) throw std::invalid_argument("triplet_metrics: no records");

    std::vector<std::string> ids;
    std::vector<std::pair<StringSet, StringSet>> full, inst, verb, target;
    for (const auto& r : records) {
        ids.push_back(r.id);
        StringSet pf, tf, pi, ti, pv, tv, pt, tt;
        for (const auto& s : r.pred) {
            const auto parts = parse_triplet(s, r.id);
            pf.insert(s);
            pi.insert(parts[0]);
            pv.insert(parts[1]);
            pt.insert(parts[2]);
        }
        for (const auto& s : r.truth) {
            const auto parts = parse_triplet(s, r.id);
            tf.insert(s);
            ti.insert(parts[0]);
            tv.insert(parts[1]);
            tt.insert(parts[2]);
        }
        full.push_back({pf, tf});
        inst.push_back({pi, ti});
        verb.push_back({pv, tv});
        target.push_back({pt, tt});
    }

    MetricReport report;
    report.task = "triplet";
    report.metrics["instrument_accuracy"] = set_match_accuracy(inst);
    report.metrics["verb_accuracy"] = set_match_accuracy(verb);
    report.metrics["target_accuracy"] = set_match_accuracy(target);
    report.metrics["triplet_accuracy"] = set_match_accuracy(full);
    report.metrics["instrument_map"] = macro_map(inst, ids);
    report.metrics["verb_map"] = macro_map(verb, ids);
    report.metrics["target_map"] = macro_map(target, ids);
    report.metrics["triplet_map"] = macro_map(full, ids);
    return report;
}

MetricReport cvs_scores(const std::vector<CvsRecord>& records, CvsOverallMode mode) {
    if (records.empty()) throw std::invalid_argument("cvs_scores: no records");

    std::array<std::size_t, 3> correct{};
    std::size_t all_three = 0;
    for (const auto& r : records) {
        bool frame_ok = true;
        for (int c = 0; c < 3; ++c) {
            const bool ok = r.pred[c] == r.truth[c];
            correct[c] += ok ? 1 : 0;
            frame_ok = frame_ok && ok;
        }
        all_three += frame_ok ? 1 : 0;
    }

    const double n = static_cast<double>(records.size());
    MetricReport report;
    report.task = "cvs";
    report.metrics["c1"] = kPct * correct[0] / n;
    report.metrics["c2"] = kPct * correct[1] / n;
    report.metrics["c3"] = kPct * correct[2] / n;
    report.metrics["avg"] =
        (report.metrics["c1"] + report.metrics["c2"] + report.metrics["c3"]) / 3.0;
    if (mode == CvsOverallMode::kJointPool) {
        report.metrics["overall"] = kPct * (correct[0] + correct[1] + correct[2]) / (3.0 * n);
    } else {
        report.metrics["overall"] = kPct * all_three / n;
    }
    return report;
}

double iou(const Box& a, const Box& b) {
    if (!(a.x1 < a.x2 && a.y1 < a.y2 && b.x1 < b.x2 && b.y1 < b.y2))
        throw std::invalid_argument("iou: degenerate box");
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
    const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
    return inter / (area_a + area_b - inter);
}

MetricReport localization_metrics(const std::vector<BoxRecord>& records) {
    if (records.empty()) throw std::invalid_argument("localization_metrics: no records");

    std::vector<double> ious;
    ious.reserve(records.size());
    for (const auto& r : records)
        ious.push_back(r.pred ? iou(*r.pred, r.truth) : 0.0);

    const double n = static_cast<double>(ious.size());
    auto ap_at = [&](double thr) {
        std::size_t hits = 0;
        for (double v : ious) hits += v >= thr ? 1 : 0;
        return kPct * hits / n;
    };

    double miou = 0.0;
    for (double v : ious) miou += v;
    miou = kPct * miou / n;

    double cocoap = 0.0;
    for (int k = 0; k < 10; ++k) cocoap += ap_at((50 + 5 * k) / 100.0);
    cocoap /= 10.0;

    MetricReport report;
    report.task = "localization";
    report.metrics["miou"] = miou;
    report.metrics["map50"] = ap_at(0.50);
    report.metrics["map75"] = ap_at(0.75);
    report.metrics["cocoap"] = cocoap;
    return report;
}

}  // namespace surglab
