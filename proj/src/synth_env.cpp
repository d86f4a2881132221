#include "surglab/synth_env.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "surglab/rng.hpp"

namespace surglab {

namespace {

const std::vector<std::string> kPhaseLabels = {
    "Preparation",
    "Calot Triangle Dissection",
    "Clipping and Cutting",
    "Gallbladder Dissection",
    "Gallbladder Packaging",
    "Cleaning and Coagulation",
    "Gallbladder Retraction",
};

const std::vector<std::array<std::string, 3>> kTripletCombos = {
    {"grasper", "retract", "gallbladder"},
    {"grasper", "grasp", "gallbladder"},
    {"grasper", "retract", "liver"},
    {"grasper", "retract", "omentum"},
    {"hook", "dissect", "peritoneum"},
    {"hook", "dissect", "gallbladder"},
    {"hook", "coagulate", "liver"},
    {"clipper", "clip", "cystic_duct"},
    {"clipper", "clip", "cystic_artery"},
    {"scissors", "cut", "cystic_duct"},
    {"scissors", "cut", "cystic_artery"},
    {"irrigator", "irrigate", "liver"},
};

const std::vector<std::string> kActionLabels = {
    "picking-up the needle",
    "positioning the needle tip",
    "pushing the needle through the tissue",
    "pulling the needle out of the tissue",
    "tying a knot with the thread",
    "cutting the suture",
};

const std::vector<std::string> kCvsLabels = {"achieved", "not achieved"};

const std::vector<Descriptor> kTools = {
    {"grasper", "metallic jaws"},   {"hook", "curved tip"},
    {"clipper", "angled jaws"},     {"scissors", "cutting blades"},
    {"bipolar", "parallel jaws"},   {"irrigator", "hollow tip"},
};

const std::vector<Descriptor> kTissues = {
    {"gallbladder", "shiny surface"},      {"liver", "reddish-brown surface"},
    {"cystic_duct", "tubular structure"},  {"cystic_artery", "pulsatile vessel"},
    {"peritoneum", "thin membrane"},       {"omentum", "fatty tissue"},
};

// Per-phase scene: tool, tissue, and the relation phrase used in Level 2.
struct PhaseScene {
    const char* tool;
    const char* tissue;
    const char* relation;
};

const std::map<std::string, PhaseScene>& phase_scenes() {
    static const std::map<std::string, PhaseScene> scenes = {
        {"Preparation", {"grasper", "gallbladder", "positioned prominently near"}},
        {"Calot Triangle Dissection", {"hook", "cystic_duct", "dissecting carefully behind"}},
        {"Clipping and Cutting", {"clipper", "cystic_duct", "closing firmly around"}},
        {"Gallbladder Dissection", {"grasper", "gallbladder", "elevating steadily from"}},
        {"Gallbladder Packaging", {"grasper", "gallbladder", "guiding carefully into"}},
        {"Cleaning and Coagulation", {"bipolar", "liver", "coagulating slowly across"}},
        {"Gallbladder Retraction", {"grasper", "gallbladder", "pulling firmly on"}},
    };
    return scenes;
}

const std::map<std::string, std::string>& action_states() {
    static const std::map<std::string, std::string> states = {
        {"picking-up the needle", "held above tissue"},
        {"positioning the needle tip", "aligned near tip"},
        {"pushing the needle through the tissue", "driven into tissue"},
        {"pulling the needle out of the tissue", "partially emerged from tissue"},
        {"tying a knot with the thread", "looped around jaws"},
        {"cutting the suture", "stretched toward scissors"},
    };
    return states;
}

const Descriptor& find_descriptor(const std::vector<Descriptor>& list, const std::string& name) {
    for (const auto& d : list)
        if (d.name == name) return d;
    throw std::invalid_argument("unknown descriptor: " + name);
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

void add_words(std::vector<std::string>& vocab, const std::string& text) {
    for (auto& w : split_words(text))
        if (std::find(vocab.begin(), vocab.end(), w) == vocab.end()) vocab.push_back(w);
}

std::vector<std::string> build_vocab() {
    std::vector<std::string> v = {"<eos>", "<think>", "</think>", "<answer>", "</answer>",
                                  "Level", "1:", "2:", "3:", "."};
    for (const auto& label : kPhaseLabels) add_words(v, label);
    for (const auto& t : kTripletCombos) add_words(v, t[0] + " " + t[1] + " " + t[2]);
    for (const auto& label : kActionLabels) add_words(v, label);
    for (const auto& label : kCvsLabels) add_words(v, label);
    for (const auto& d : kTools) {
        add_words(v, d.name);
        add_words(v, d.traits);
    }
    for (const auto& d : kTissues) {
        add_words(v, d.name);
        add_words(v, d.traits);
    }
    add_words(v, "I see a and with the is indicates tool");
    add_words(v, "robotic curved needle hepatocystic triangle liver bed tissue planes");
    add_words(v, "performing on");
    for (const auto& [label, scene] : phase_scenes()) add_words(v, scene.relation);
    for (const auto& [label, state] : action_states()) add_words(v, state);
    add_words(v, "show a clear separation window");
    add_words(v, "appear without a separation window");
    if (v.size() > 128) throw std::logic_error("shared vocab exceeds 128 tokens");
    return v;
}

const std::map<std::string, int>& token_ids() {
    static const std::map<std::string, int> ids = [] {
        std::map<std::string, int> m;
        const auto& v = shared_vocab();
        for (int i = 0; i < static_cast<int>(v.size()); ++i) m[v[i]] = i;
        return m;
    }();
    return ids;
}

// Unit codewords in the informative subspace, re-drawn until pairwise
// separation is comfortably above the context noise level.
std::vector<Vector> build_codebook(TaskKind kind, int n_classes) {
    Rng rng(hash_combine(fnv1a(to_string(kind)), 0xc0def00dULL));
    std::vector<Vector> code;
    while (static_cast<int>(code.size()) < n_classes) {
        Vector c(kInformativeDims);
        double norm = 0.0;
        for (auto& x : c) {
            x = rng.gaussian();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : c) x /= norm;
        bool ok = true;
        for (const auto& other : code) {
            double d2 = 0.0;
            for (int j = 0; j < kInformativeDims; ++j)
                d2 += (c[j] - other[j]) * (c[j] - other[j]);
            if (d2 < 0.9 * 0.9) {
                ok = false;
                break;
            }
        }
        if (ok) code.push_back(std::move(c));
    }
    return code;
}

const std::vector<Vector>& codebook(TaskKind kind) {
    static const std::map<TaskKind, std::vector<Vector>> books = [] {
        std::map<TaskKind, std::vector<Vector>> m;
        for (TaskKind k : {TaskKind::kPhase, TaskKind::kTriplet, TaskKind::kAction,
                           TaskKind::kCvsCriterion})
            m[k] = build_codebook(k, static_cast<int>(label_vocabulary(k).size()));
        return m;
    }();
    return books.at(kind);
}

}  // namespace

std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::kPhase: return "phase";
        case TaskKind::kTriplet: return "triplet";
        case TaskKind::kAction: return "action";
        case TaskKind::kCvsCriterion: return "cvs_criterion";
    }
    throw std::logic_error("bad task kind");
}

TaskKind task_kind_from_string(const std::string& name) {
    if (name == "phase") return TaskKind::kPhase;
    if (name == "triplet") return TaskKind::kTriplet;
    if (name == "action") return TaskKind::kAction;
    if (name == "cvs_criterion" || name == "cvs") return TaskKind::kCvsCriterion;
    throw std::invalid_argument("unknown task kind: " + name);
}

const std::vector<std::string>& label_vocabulary(TaskKind kind) {
    static const std::vector<std::string> triplet_labels = [] {
        std::vector<std::string> out;
        for (const auto& t : kTripletCombos) out.push_back(t[0] + " " + t[1] + " " + t[2]);
        return out;
    }();
    switch (kind) {
        case TaskKind::kPhase: return kPhaseLabels;
        case TaskKind::kTriplet: return triplet_labels;
        case TaskKind::kAction: return kActionLabels;
        case TaskKind::kCvsCriterion: return kCvsLabels;
    }
    throw std::logic_error("bad task kind");
}

const ConstraintBundle& bundle_for(TaskKind kind) {
    static const std::map<TaskKind, ConstraintBundle> bundles = [] {
        std::map<TaskKind, ConstraintBundle> m;
        for (TaskKind k : {TaskKind::kPhase, TaskKind::kTriplet, TaskKind::kAction,
                           TaskKind::kCvsCriterion}) {
            ConstraintBundle b;
            b.kind = k;
            b.tools = kTools;
            b.tissues = kTissues;
            b.labels = label_vocabulary(k);
            if (k == TaskKind::kTriplet) b.cooccurrence = kTripletCombos;
            m[k] = std::move(b);
        }
        return m;
    }();
    return bundles.at(kind);
}

std::vector<TaskInstance> gen_dataset(std::uint64_t seed, TaskKind kind, int n) {
    if (n < 1) throw std::invalid_argument("gen_dataset: n must be >= 1");
    const auto& labels = label_vocabulary(kind);
    const int m = static_cast<int>(labels.size());
    const auto& code = codebook(kind);

    std::vector<TaskInstance> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        TaskInstance inst;
        inst.kind = kind;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "-%06d", i);
        inst.id = to_string(kind) + buf;

        // Stratified labels: each block of m indices covers every class once,
        // rotated by a per-block pseudo-random offset.
        const std::uint64_t block = static_cast<std::uint64_t>(i) / m;
        const int rot = static_cast<int>(splitmix64(hash_combine(seed, block)) % m);
        const int label_idx = (i % m + rot) % m;
        inst.label = labels[label_idx];

        Rng rng(hash_combine(seed, fnv1a(inst.id)));
        inst.context.assign(kContextDim, 0.0);
        for (int j = 0; j < kInformativeDims; ++j)
            inst.context[j] = code[label_idx][j] + kContextNoiseSigma * rng.gaussian();
        for (int j = kInformativeDims; j < kContextDim; ++j) inst.context[j] = kDistractorSigma * rng.gaussian();
        out.push_back(std::move(inst));
    }
    return out;
}

std::string scripted_teacher(const TaskInstance& instance, const ConstraintBundle& bundle) {
    if (instance.kind != bundle.kind)
        throw std::invalid_argument("scripted_teacher: instance kind does not match bundle");
    const auto& labels = bundle.labels;
    if (std::find(labels.begin(), labels.end(), instance.label) == labels.end())
        throw std::invalid_argument("scripted_teacher: label outside bundle vocabulary: " +
                                    instance.label);

    std::ostringstream t;
    t << "<think> Level 1: ";
    switch (instance.kind) {
        case TaskKind::kPhase: {
            const auto& scene = phase_scenes().at(instance.label);
            const auto& tool = find_descriptor(bundle.tools, scene.tool);
            const auto& tissue = find_descriptor(bundle.tissues, scene.tissue);
            t << "I see a " << tool.name << " with " << tool.traits << " . ";
            t << "Level 2: " << scene.relation << " the " << tissue.name << " . ";
            t << "Level 3: indicates " << instance.label << " . ";
            break;
        }
        case TaskKind::kTriplet: {
            const auto words = split_words(instance.label);
            const auto& tool = find_descriptor(bundle.tools, words[0]);
            t << "I see a tool with " << tool.traits << " . ";
            t << "Level 2: " << words[0] << " performing " << words[1] << " on the " << words[2]
              << " . ";
            t << "Level 3: indicates " << instance.label << " . ";
            break;
        }
        case TaskKind::kAction: {
            const auto& state = action_states().at(instance.label);
            t << "I see a robotic grasper and curved needle . ";
            t << "Level 2: needle is " << state << " . ";
            t << "Level 3: indicates " << instance.label << " . ";
            break;
        }
        case TaskKind::kCvsCriterion: {
            const bool yes = instance.label == "achieved";
            t << "I see the hepatocystic triangle and liver bed . ";
            t << "Level 2: tissue planes "
              << (yes ? "show a clear separation window" : "appear without separation window")
              << " . ";
            t << "Level 3: indicates " << instance.label << " . ";
            break;
        }
    }
    t << "</think> <answer> " << instance.label << " </answer>";
    return t.str();
}

std::vector<int> teacher_tokens(const TaskInstance& instance, const ConstraintBundle& bundle) {
    std::vector<int> ids = tokenize(scripted_teacher(instance, bundle));
    ids.push_back(eos_token_id());
    return ids;
}

const std::vector<std::string>& shared_vocab() {
    static const std::vector<std::string> vocab = build_vocab();
    return vocab;
}

const std::string& eos_token() {
    static const std::string tok = "<eos>";
    return tok;
}

int eos_token_id() {
    static const int id = token_ids().at(eos_token());
    return id;
}

std::vector<int> tokenize(const std::string& text) {
    const auto& ids = token_ids();
    std::vector<int> out;
    for (const auto& w : split_words(text)) {
        const auto it = ids.find(w);
        if (it == ids.end()) throw std::invalid_argument("tokenize: unknown word: " + w);
        out.push_back(it->second);
    }
    return out;
}

std::string detokenize(const std::vector<int>& ids, bool keep_eos) {
    const auto& v = shared_vocab();
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= static_cast<int>(v.size()))
            throw std::invalid_argument("detokenize: token id out of range");
        if (id == eos_token_id() && !keep_eos) continue;
        if (!out.empty()) out.push_back(' ');
        out += v[id];
    }
    return out;
}

}  // namespace surglab
