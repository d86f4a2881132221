#include "surglab/io.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace surglab {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

// Reads a JSONL file, validating the header schema, and returns the records.
std::vector<json> read_jsonl(const std::string& path, const std::string& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    const json header = json::parse(line);
    if (!header.contains("format_version") || header.value("schema", "") != schema)
        throw std::runtime_error("bad header for schema " + schema + " in " + path);
    std::vector<json> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(json::parse(line));
    }
    return records;
}

void write_header(std::ofstream& out, const std::string& schema, const HeaderMeta& meta) {
    json h{{"format_version", 1}, {"schema", schema}};
    for (const auto& [k, v] : meta) h[k] = v;
    out << h.dump() << "\n";
}

// Generic prediction loader: the pred file may carry joined truth values, or
// truth may come from a second file keyed by id.
std::vector<std::pair<json, json>> load_pred_truth(const std::string& pred_path,
                                                   const std::string& truth_path) {
    const auto preds = read_jsonl(pred_path, "predictions");
    std::map<std::string, json> truths;
    if (!truth_path.empty())
        for (const auto& r : read_jsonl(truth_path, "predictions"))
            truths[r.at("id").get<std::string>()] = r;

    std::vector<std::pair<json, json>> out;
    for (const auto& r : preds) {
        const std::string id = r.at("id").get<std::string>();
        json truth;
        if (!truth_path.empty()) {
            const auto it = truths.find(id);
            if (it == truths.end())
                throw std::runtime_error("no truth record for id " + id);
            truth = it->second.at("truth");
        } else {
            if (!r.contains("truth"))
                throw std::runtime_error("record " + id + " has no truth and no truth file given");
            truth = r.at("truth");
        }
        out.push_back({r, truth});
    }
    return out;
}

Box box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw std::runtime_error("box must be [x1,y1,x2,y2]");
    return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

std::array<bool, 3> cvs_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::runtime_error("cvs judgment must be an array of 3 binary values");
    std::array<bool, 3> out{};
    for (int c = 0; c < 3; ++c) {
        if (j[c].is_boolean())
            out[c] = j[c].get<bool>();
        else
            out[c] = j[c].get<int>() != 0;
    }
    return out;
}

}  // namespace

void save_dataset(const std::vector<TaskInstance>& dataset, const std::string& path,
                  const HeaderMeta& meta) {
    auto out = open_out(path);
    write_header(out, "task_instances", meta);
    for (const auto& inst : dataset) {
        out << json{{"id", inst.id},
                    {"kind", to_string(inst.kind)},
                    {"context", inst.context},
                    {"label", inst.label}}
                   .dump()
            << "\n";
    }
}

std::vector<TaskInstance> load_dataset(const std::string& path) {
    std::vector<TaskInstance> out;
    for (const auto& r : read_jsonl(path, "task_instances")) {
        TaskInstance inst;
        inst.id = r.at("id").get<std::string>();
        inst.kind = task_kind_from_string(r.at("kind").get<std::string>());
        inst.context = r.at("context").get<Vector>();
        inst.label = r.at("label").get<std::string>();
        if (static_cast<int>(inst.context.size()) != kContextDim)
            throw std::runtime_error("bad context length for " + inst.id);
        out.push_back(std::move(inst));
    }
    return out;
}

void save_traces(const std::vector<std::pair<std::string, std::string>>& id_traces,
                 const std::string& path, const HeaderMeta& meta) {
    auto out = open_out(path);
    write_header(out, "teacher_traces", meta);
    for (const auto& [id, trace] : id_traces)
        out << json{{"id", id}, {"trace", trace}}.dump() << "\n";
}

void save_pseudo_labels(const std::vector<PseudoLabel>& labels, const std::string& path,
                        const HeaderMeta& meta) {
    auto out = open_out(path);
    write_header(out, "pseudo_labels", meta);
    for (const auto& pl : labels)
        out << json{{"id", pl.instance_id},
                    {"pathway", to_string(pl.pathway)},
                    {"trace", pl.trace},
                    {"label", pl.label}}
                   .dump()
            << "\n";
}

std::vector<PseudoLabel> load_pseudo_labels(const std::string& path) {
    std::vector<PseudoLabel> out;
    for (const auto& r : read_jsonl(path, "pseudo_labels")) {
        PseudoLabel pl;
        pl.instance_id = r.at("id").get<std::string>();
        const std::string pathway = r.at("pathway").get<std::string>();
        if (pathway == "Predicted")
            pl.pathway = Pathway::kPredicted;
        else if (pathway == "Generated")
            pl.pathway = Pathway::kGenerated;
        else
            throw std::runtime_error("unknown pathway " + pathway);
        pl.trace = r.at("trace").get<std::string>();
        pl.label = r.at("label").get<std::string>();
        out.push_back(std::move(pl));
    }
    return out;
}

std::vector<LabelRecord> load_label_records(const std::string& pred_path,
                                            const std::string& truth_path) {
    std::vector<LabelRecord> out;
    for (const auto& [r, truth] : load_pred_truth(pred_path, truth_path))
        out.push_back({r.at("id").get<std::string>(), r.at("pred").get<std::string>(),
                       truth.get<std::string>()});
    return out;
}

std::vector<TripletRecord> load_triplet_records(const std::string& pred_path,
                                                const std::string& truth_path) {
    std::vector<TripletRecord> out;
    for (const auto& [r, truth] : load_pred_truth(pred_path, truth_path))
        out.push_back({r.at("id").get<std::string>(),
                       r.at("pred").get<std::vector<std::string>>(),
                       truth.get<std::vector<std::string>>()});
    return out;
}

std::vector<CvsRecord> load_cvs_records(const std::string& pred_path,
                                        const std::string& truth_path) {
    std::vector<CvsRecord> out;
    for (const auto& [r, truth] : load_pred_truth(pred_path, truth_path))
        out.push_back({r.at("id").get<std::string>(), cvs_from_json(r.at("pred")),
                       cvs_from_json(truth)});
    return out;
}

std::vector<BoxRecord> load_box_records(const std::string& pred_path,
                                        const std::string& truth_path) {
    std::vector<BoxRecord> out;
    for (const auto& [r, truth] : load_pred_truth(pred_path, truth_path)) {
        BoxRecord rec;
        rec.id = r.at("id").get<std::string>();
        if (r.contains("pred") && !r.at("pred").is_null()) rec.pred = box_from_json(r.at("pred"));
        rec.truth = box_from_json(truth);
        out.push_back(std::move(rec));
    }
    return out;
}

void save_metric_report(const MetricReport& report, const std::string& path,
                        const HeaderMeta& meta) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [name, value] : report.metrics) metrics[name] = value;
    json j{{"format_version", 1}, {"task", report.task}, {"metrics", metrics}};
    for (const auto& [k, v] : meta) j[k] = v;
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void save_label_predictions(const std::vector<LabelRecord>& records, const std::string& kind,
                            const std::string& path, const HeaderMeta& meta) {
    auto out = open_out(path);
    write_header(out, "predictions", meta);
    for (const auto& r : records)
        out << json{{"id", r.id}, {"kind", kind}, {"pred", r.pred}, {"truth", r.truth}}.dump()
            << "\n";
}

}  // namespace surglab
