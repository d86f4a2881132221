#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "surglab/metrics.hpp"
#include "surglab/refine.hpp"
#include "surglab/synth_env.hpp"

namespace surglab {

// Line-delimited JSON files. The first line is a header record carrying
// format_version, a schema name, and any extra run metadata (seed, config
// hash); every following line is one record.

using HeaderMeta = std::map<std::string, std::string>;

void save_dataset(const std::vector<TaskInstance>& dataset, const std::string& path,
                  const HeaderMeta& meta = {});
std::vector<TaskInstance> load_dataset(const std::string& path);

void save_traces(const std::vector<std::pair<std::string, std::string>>& id_traces,
                 const std::string& path, const HeaderMeta& meta = {});

void save_pseudo_labels(const std::vector<PseudoLabel>& labels, const std::string& path,
                        const HeaderMeta& meta = {});
std::vector<PseudoLabel> load_pseudo_labels(const std::string& path);

// Prediction records; the truth field may come joined in the prediction file
// or from a separate truth file keyed by id.
std::vector<LabelRecord> load_label_records(const std::string& pred_path,
                                            const std::string& truth_path = "");
std::vector<TripletRecord> load_triplet_records(const std::string& pred_path,
                                                const std::string& truth_path = "");
std::vector<CvsRecord> load_cvs_records(const std::string& pred_path,
                                        const std::string& truth_path = "");
std::vector<BoxRecord> load_box_records(const std::string& pred_path,
                                        const std::string& truth_path = "");

void save_metric_report(const MetricReport& report, const std::string& path,
                        const HeaderMeta& meta = {});

// Prediction record writer used by the pipeline; label answers only.
void save_label_predictions(const std::vector<LabelRecord>& records, const std::string& kind,
                            const std::string& path, const HeaderMeta& meta = {});

}  // namespace surglab
