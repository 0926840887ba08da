#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "abstain/experts.hpp"
#include "abstain/losses.hpp"

namespace abstain {

// Raised when a learner asks for a loss it could not have observed.
class ProtocolViolation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

// One round of data as seen by a learner. Losses of accepting experts are only
// revealed when the played expert accepts; abstainers always reveal c.
class RoundFeedback
{
public:
    RoundFeedback(const PoolEval& eval, std::span<const double> losses, AbstentionCost c,
                  std::span<const double> x = {}, int y = 0);

    std::size_t size() const { return eval_.size(); }
    bool abstains(std::size_t j) const { return eval_.abstains[j] != 0; }
    std::size_t abstaining_count() const { return eval_.n_abstaining; }
    AbstentionCost cost() const { return c_; }
    const PoolEval& eval() const { return eval_; }

    // Loss of expert j once `chosen` has been played.
    double reveal(std::size_t j, std::size_t chosen) const;
    // Loss of j with the label supplied regardless of abstention.
    double full_information_loss(std::size_t j) const { return losses_[j]; }

    // Raw round data for learners that act on the input directly. The label may only
    // be used after an accepting play.
    std::span<const double> input() const { return x_; }
    int label() const { return y_; }

private:
    const PoolEval& eval_;
    std::span<const double> losses_;
    AbstentionCost c_;
    std::span<const double> x_;
    int y_;
};

struct StepOutcome
{
    std::size_t chosen = 0;
    double loss = 0.0;
    bool abstained = false;
    std::uint64_t updated = 0; // size of the set of experts whose statistics changed
    std::uint64_t edges = 0;   // edge count of the feedback graph used this round
};

class Learner
{
public:
    virtual ~Learner() = default;
    virtual std::string name() const = 0;
    virtual StepOutcome step(const RoundFeedback& round) = 0;
    virtual nlohmann::json snapshot() const = 0;
};

} // namespace abstain
