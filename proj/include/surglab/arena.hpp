#pragma once

#include <map>
#include <string>

namespace surglab {

// model name -> (task id -> primary-metric score in [0,100]); tasks may be
// missing for any model.
struct ArenaTable {
    std::map<std::string, std::map<std::string, double>> scores;
};

// Arithmetic mean over the model's available tasks. Rejects unknown models
// and models without any task entry.
double arena_score(const ArenaTable& table, const std::string& model);

ArenaTable load_arena_table(const std::string& path);
void save_arena_table(const ArenaTable& table, const std::string& path);

}  // namespace surglab
