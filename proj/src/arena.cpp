#include "surglab/arena.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace surglab {

double arena_score(const ArenaTable& table, const std::string& model) {
    const auto it = table.scores.find(model);
    if (it == table.scores.end())
        throw std::invalid_argument("arena_score: unknown model " + model);
    if (it->second.empty())
        throw std::invalid_argument("arena_score: model " + model + " has no task entries");
    double sum = 0.0;
    for (const auto& [task, score] : it->second) sum += score;
    return sum / static_cast<double>(it->second.size());
}

ArenaTable load_arena_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open arena table: " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("models")) throw std::runtime_error("arena table missing models: " + path);
    ArenaTable table;
    for (const auto& [model, tasks] : j.at("models").items())
        for (const auto& [task, score] : tasks.items())
            table.scores[model][task] = score.get<double>();
    return table;
}

void save_arena_table(const ArenaTable& table, const std::string& path) {
    nlohmann::json models = nlohmann::json::object();
    for (const auto& [model, tasks] : table.scores) {
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [task, score] : tasks) t[task] = score;
        models[model] = t;
    }
    nlohmann::json j{{"format_version", 1}, {"models", models}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write arena table: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace surglab
