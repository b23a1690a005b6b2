#pragma once
// Reproduction checks against the published reference tables, shared by the
// CLI `verify` command and the acceptance test binary.
#include <string>
#include <vector>

namespace irkwl {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::vector<std::string> details;  // one line per cell/sub-check
};

// Run acceptance criterion 1..15. jobs > 1 parallelizes independent runs
// inside a criterion where it helps.
CriterionResult run_criterion(int id, int jobs = 1);

// Criteria covering a published table: 9 -> 8, 10 -> 9, 11 -> 10, 12 -> 11,
// 13/14 -> 13 (reduced-domain properties). Returns the matching criterion.
CriterionResult verify_table(int table_no, int jobs = 1);

std::vector<int> all_criteria();  // 1..15

// Documented expectation per criterion. Two criteria cannot pass as printed:
// criterion 1 (one scheme's stated order contradicts its own coefficients)
// and criterion 5 (one published crossover value is a suspected misprint).
// Each failing cell is explained in that criterion's detail lines.
bool criterion_expected_pass(int id);

}  // namespace irkwl
