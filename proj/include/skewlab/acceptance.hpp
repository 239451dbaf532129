#pragma once

#include <string>
#include <vector>

namespace skewlab::accept {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string details;
    double seconds = 0.0;
};

// Runs every acceptance criterion, writing artifacts under scratchDir.
std::vector<CriterionResult> run_all(const std::string& scratchDir, int threads);

// One line per criterion; returns true when everything passed.
bool print_results(const std::vector<CriterionResult>& results);

}  // namespace skewlab::accept
