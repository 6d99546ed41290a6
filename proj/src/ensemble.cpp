#include "sqakit/ensemble.hpp"

#include <algorithm>
#include <set>

namespace sqakit::ensemble {

namespace {

void require_priority_covers(const PriorityOrder& priority, const std::vector<std::string>& voters) {
    for (const std::string& model : voters) {
        if (std::find(priority.begin(), priority.end(), model) == priority.end()) {
            throw EnsembleError(EnsembleError::Kind::InvalidPriority,
                                "priority order does not cover model " + model);
        }
    }
    std::set<std::string> unique(priority.begin(), priority.end());
    if (unique.size() != priority.size()) {
        throw EnsembleError(EnsembleError::Kind::InvalidPriority, "priority order repeats a model");
    }
}

/// Among the tied candidates, returns (candidate, model) for the highest
/// priority model that voted for any of them.
std::pair<int, std::string> settle_tie(const std::vector<int>& tied,
                                       const std::map<int, std::vector<std::string>>& votes,
                                       const PriorityOrder& priority) {
    for (const std::string& model : priority) {
        for (int candidate : tied) {
            const auto& voters = votes.at(candidate);
            if (std::find(voters.begin(), voters.end(), model) != voters.end()) {
                return {candidate, model};
            }
        }
    }
    // Unreachable when the priority order covers all voters.
    throw EnsembleError(EnsembleError::Kind::InvalidPriority,
                        "no tied candidate voter found in priority order");
}

} // namespace

EnsembleVerdict vote_fl(const std::map<std::string, parsing::FLAnswer>& answers,
                        const PriorityOrder& priority, int k_max) {
    if (answers.empty()) {
        throw EnsembleError(EnsembleError::Kind::NoAnswers, "no parseable answers to vote over");
    }
    {
        std::vector<std::string> voters;
        for (const auto& [model, _] : answers) voters.push_back(model);
        require_priority_covers(priority, voters);
    }

    EnsembleVerdict verdict;
    verdict.task = Task::FaultLocalization;

    for (int rank = 1; rank <= k_max; ++rank) {
        // Collect each model's rank-r candidate; shorter rankings abstain.
        std::map<int, std::vector<std::string>> votes;
        for (const auto& [model, answer] : answers) {
            if (static_cast<int>(answer.locations.size()) < rank) continue;
            votes[answer.locations[static_cast<std::size_t>(rank - 1)].line].push_back(model);
        }

        RankTally tally;
        tally.rank = rank;
        for (const auto& [line, models] : votes) tally.votes[std::to_string(line)] = models;
        verdict.tally.push_back(std::move(tally));

        if (votes.empty()) continue;

        std::set<int> candidates;
        for (const auto& [line, _] : votes) candidates.insert(line);

        while (!candidates.empty()) {
            std::size_t top_count = 0;
            for (int c : candidates) top_count = std::max(top_count, votes.at(c).size());
            std::vector<int> tied;
            for (int c : candidates) {
                if (votes.at(c).size() == top_count) tied.push_back(c);
            }

            int winner = tied.front();
            std::optional<std::string> tiebreak_model;
            if (tied.size() > 1) {
                const auto [candidate, model] = settle_tie(tied, votes, priority);
                winner = candidate;
                tiebreak_model = model;
            }

            const bool duplicate = std::find(verdict.final_lines.begin(), verdict.final_lines.end(),
                                             winner) != verdict.final_lines.end();
            if (duplicate) {
                // Discard and fall back to the next highest-voted candidate.
                candidates.erase(winner);
                continue;
            }
            verdict.final_lines.push_back(winner);
            if (tiebreak_model) verdict.tiebreaks_fired.push_back({rank, *tiebreak_model});
            break;
        }
    }
    return verdict;
}

EnsembleVerdict vote_vd(const std::map<std::string, parsing::VDAnswer>& answers,
                        const PriorityOrder& priority) {
    if (answers.empty()) {
        throw EnsembleError(EnsembleError::Kind::NoAnswers, "no parseable answers to vote over");
    }
    {
        std::vector<std::string> voters;
        for (const auto& [model, _] : answers) voters.push_back(model);
        require_priority_covers(priority, voters);
    }

    EnsembleVerdict verdict;
    verdict.task = Task::VulnerabilityDetection;

    RankTally tally;
    tally.rank = 1;
    std::size_t vulnerable = 0;
    std::size_t non_vulnerable = 0;
    for (const auto& [model, answer] : answers) {
        tally.votes[std::string(to_string(answer.verdict))].push_back(model);
        (answer.verdict == Verdict::Vulnerable ? vulnerable : non_vulnerable) += 1;
    }
    verdict.tally.push_back(std::move(tally));

    if (vulnerable != non_vulnerable) {
        verdict.final_verdict =
            vulnerable > non_vulnerable ? Verdict::Vulnerable : Verdict::NonVulnerable;
        return verdict;
    }
    // Exact tie: the highest-priority model with a parseable answer decides.
    for (const std::string& model : priority) {
        const auto it = answers.find(model);
        if (it == answers.end()) continue;
        verdict.final_verdict = it->second.verdict;
        verdict.tiebreaks_fired.push_back({1, model});
        return verdict;
    }
    throw EnsembleError(EnsembleError::Kind::InvalidPriority,
                        "no voting model found in priority order");
}

namespace {

void refine_side(gateway::Gateway& gw, Task task, const prompting::PromptBundle& initial_bundle,
                 const gateway::ModelConfig& cfg, CrossValSide& side, const std::string& other_raw,
                 gateway::CacheMode mode, std::string& current_raw) {
    const prompting::PromptBundle bundle = prompting::build_validation(
        task, initial_bundle, current_raw, other_raw, prompting::ensure_for(task));
    const gateway::RawResponse response = gw.complete(bundle, cfg, mode);
    side.fingerprints.push_back(response.request_fingerprint);
    side.refined_raw = response.text;
    current_raw = response.text;
}

void parse_side(Task task, CrossValSide& side) {
    if (!side.refined_raw) return;
    try {
        if (task == Task::FaultLocalization) {
            side.refined = parsing::parse_fl(*side.refined_raw);
        } else {
            side.refined = parsing::parse_vd(*side.refined_raw);
        }
    } catch (const parsing::ParseError& e) {
        side.error = e.what();
    }
}

} // namespace

CrossValResult cross_validate(gateway::Gateway& gw, Task task,
                              const prompting::PromptBundle& initial_bundle,
                              const gateway::ModelConfig& left_cfg, const std::string& left_initial_raw,
                              const gateway::ModelConfig& right_cfg,
                              const std::string& right_initial_raw, int rounds,
                              gateway::CacheMode mode) {
    CrossValResult result;
    result.left.model_id = left_cfg.model_id;
    result.left.initial_raw = left_initial_raw;
    result.right.model_id = right_cfg.model_id;
    result.right.initial_raw = right_initial_raw;

    std::string left_raw = left_initial_raw;
    std::string right_raw = right_initial_raw;
    bool left_alive = true;
    bool right_alive = true;

    for (int round = 0; round < rounds; ++round) {
        // Both sides see the other's answer from before this round.
        const std::string left_before = left_raw;
        const std::string right_before = right_raw;
        if (left_alive) {
            try {
                refine_side(gw, task, initial_bundle, left_cfg, result.left, right_before, mode,
                            left_raw);
            } catch (const std::exception& e) {
                result.left.error = e.what();
                left_alive = false;
            }
        }
        if (right_alive) {
            try {
                refine_side(gw, task, initial_bundle, right_cfg, result.right, left_before, mode,
                            right_raw);
            } catch (const std::exception& e) {
                result.right.error = e.what();
                right_alive = false;
            }
        }
    }

    if (left_alive) parse_side(task, result.left);
    if (right_alive) parse_side(task, result.right);
    return result;
}

} // namespace sqakit::ensemble
