#include "pathnet/history.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "pathnet/error.hpp"

namespace pathnet {

namespace {

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_history_csv(const std::filesystem::path& path, const History& history)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "generation,winner_index,winner_fitness,loser_fitness,test_accuracy\n";
    for (const auto& h : history) {
        out << h.generation << ',' << h.winner_index << ',' << real(h.winner_fitness) << ','
            << real(h.loser_fitness) << ',' << (h.test_accuracy ? real(*h.test_accuracy) : "") << '\n';
    }
}

History read_history_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "generation,winner_index,winner_fitness,loser_fitness,test_accuracy") {
        throw DataError(path.string() + ": unexpected history header");
    }
    History history;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string field[5];
        for (int i = 0; i < 5; ++i) {
            std::getline(ss, field[i], ',');
        }
        try {
            HistoryEntry h;
            h.generation = std::stoi(field[0]);
            h.winner_index = std::stoi(field[1]);
            h.winner_fitness = std::stod(field[2]);
            h.loser_fitness = std::stod(field[3]);
            if (!field[4].empty()) {
                h.test_accuracy = std::stod(field[4]);
            }
            history.push_back(h);
        } catch (const std::exception&) {
            throw DataError(path.string() + ": malformed history row '" + line + "'");
        }
    }
    return history;
}

}  // namespace pathnet
