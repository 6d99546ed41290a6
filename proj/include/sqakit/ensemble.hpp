#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqakit/core.hpp"
#include "sqakit/gateway.hpp"
#include "sqakit/parsing.hpp"
#include "sqakit/prompting.hpp"

namespace sqakit::ensemble {

class EnsembleError : public std::runtime_error {
public:
    enum class Kind { NoAnswers, InvalidPriority };

    EnsembleError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Model ids ordered most-preferred first; must cover every voting model.
using PriorityOrder = std::vector<std::string>;

struct Tiebreak {
    int rank = 0;
    std::string chosen_by; // model whose vote settled the tie

    bool operator==(const Tiebreak&) const = default;
};

struct RankTally {
    int rank = 0;
    // candidate (line number or verdict label, stringified) -> voting models
    std::map<std::string, std::vector<std::string>> votes;
};

struct EnsembleVerdict {
    Task task = Task::FaultLocalization;
    std::vector<int> final_lines;           // FL: unique, at most k_max
    std::optional<Verdict> final_verdict;   // VD
    std::vector<RankTally> tally;
    std::vector<Tiebreak> tiebreaks_fired;
};

/// Rank-wise majority voting. Each rank 1..k_max is decided independently:
/// models with fewer locations abstain at that rank, the mode wins, ties go
/// to the highest-priority model among the tied candidates' voters, and a
/// winner that duplicates an earlier final line is replaced by the next
/// highest-voted candidate at the same rank.
EnsembleVerdict vote_fl(const std::map<std::string, parsing::FLAnswer>& answers,
                        const PriorityOrder& priority, int k_max = 3);

/// Majority verdict; an exact tie takes the verdict of the highest-priority
/// model that produced a parseable answer.
EnsembleVerdict vote_vd(const std::map<std::string, parsing::VDAnswer>& answers,
                        const PriorityOrder& priority);

struct CrossValSide {
    std::string model_id;
    std::string initial_raw;
    std::optional<std::string> refined_raw;
    std::optional<parsing::ModelAnswer> refined;
    std::optional<std::string> error; // gateway or parse failure for this side
    std::vector<std::string> fingerprints; // one per validation round
};

struct CrossValResult {
    CrossValSide left;  // left re-evaluated using right's answers
    CrossValSide right; // right re-evaluated using left's answers
};

/// One validation exchange per round: each side receives its own history
/// plus the other side's latest raw answer. A failure on one side never
/// discards the other side's result.
CrossValResult cross_validate(gateway::Gateway& gw, Task task,
                              const prompting::PromptBundle& initial_bundle,
                              const gateway::ModelConfig& left_cfg, const std::string& left_initial_raw,
                              const gateway::ModelConfig& right_cfg, const std::string& right_initial_raw,
                              int rounds, gateway::CacheMode mode);

} // namespace sqakit::ensemble
