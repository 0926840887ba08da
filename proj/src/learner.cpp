#include "abstain/learner.hpp"

namespace abstain {

RoundFeedback::RoundFeedback(const PoolEval& eval, std::span<const double> losses, AbstentionCost c,
                             std::span<const double> x, int y)
    : eval_(eval), losses_(losses), c_(c), x_(x), y_(y)
{
    if (losses.size() != eval.size())
        throw std::invalid_argument("RoundFeedback: one loss per expert is required");
}

double RoundFeedback::reveal(std::size_t j, std::size_t chosen) const
{
    if (j >= size() || chosen >= size())
        throw std::out_of_range("RoundFeedback::reveal: expert index out of range");
    if (abstains(chosen) && !abstains(j))
        throw ProtocolViolation("expert " + std::to_string(j) + " accepts but the played expert " +
                                std::to_string(chosen) + " abstained; the label is not available");
    return losses_[j];
}

} // namespace abstain
