#pragma once

#include <string>
#include <vector>

namespace lab {

enum class AcceptanceSuite { Deterministic, MonteCarlo, Full };

/// One numeric comparison inside a criterion.
struct AcceptanceCheck {
    std::string name;
    double estimate = 0.0;
    double target = 0.0;
    double tolerance = 0.0;  // |estimate - target| <= tolerance unless noted in name
    bool passed = false;
};

/// One acceptance criterion: a titled group of checks plus its wall time.
struct CriterionResult {
    int id = 0;
    std::string title;
    bool deterministic = true;
    std::vector<AcceptanceCheck> checks;
    double seconds = 0.0;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

// Runs the requested slice of the acceptance suite and returns one result
// per criterion, in criterion order. Monte-Carlo path counts can be scaled
// by `mc_scale` (error bars widen as 1/sqrt(scale)); the pass bands always
// use the actual standard errors, so scaled runs are still evaluated.
std::vector<CriterionResult> run_acceptance(AcceptanceSuite suite, double mc_scale = 1.0);

}  // namespace lab
