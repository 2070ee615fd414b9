#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace topoforge {

/// What an equilibrium solve was spent on. Used for audit breakdowns.
enum class SolveKind : int { TopOpt = 0, Scoring = 1 };

/// Thrown when a capped ledger runs out of budget mid-computation.
/// `consumed` carries the total solves charged to the ledger at throw time.
struct BudgetExhausted : std::runtime_error {
    explicit BudgetExhausted(std::int64_t consumed_)
        : std::runtime_error("computation budget exhausted after " +
                             std::to_string(consumed_) + " equilibrium solves"),
          consumed(consumed_) {}
    std::int64_t consumed;
};

/// Counts Ku=s solves, the unit of computational budget. Optionally capped:
/// a charge that would exceed the cap consumes the remainder and throws.
/// Increments are atomic so independent problems can be solved concurrently.
class BudgetLedger {
  public:
    BudgetLedger() = default;
    explicit BudgetLedger(std::int64_t cap) : cap_(cap) {}

    /// Charge `n` solves of the given kind. Throws BudgetExhausted if a cap
    /// is set and the charge does not fit; the remaining headroom is still
    /// consumed so that replaying a recorded cost matches a live capped run.
    void charge(SolveKind kind, std::int64_t n = 1) {
        std::int64_t cur = total_.load(std::memory_order_relaxed);
        for (;;) {
            if (cap_ >= 0 && cur + n > cap_) {
                // consume what is left, then give up
                while (!total_.compare_exchange_weak(cur, cap_, std::memory_order_relaxed)) {
                    if (cur >= cap_) break;
                }
                by_kind_[static_cast<int>(kind)].fetch_add(cap_ > cur ? cap_ - cur : 0,
                                                           std::memory_order_relaxed);
                throw BudgetExhausted(total_.load(std::memory_order_relaxed));
            }
            if (total_.compare_exchange_weak(cur, cur + n, std::memory_order_relaxed)) break;
        }
        by_kind_[static_cast<int>(kind)].fetch_add(n, std::memory_order_relaxed);
    }

    std::int64_t total() const { return total_.load(std::memory_order_relaxed); }
    std::int64_t count(SolveKind kind) const {
        return by_kind_[static_cast<int>(kind)].load(std::memory_order_relaxed);
    }
    std::int64_t cap() const { return cap_; }
    bool capped() const { return cap_ >= 0; }
    std::int64_t remaining() const { return cap_ < 0 ? -1 : cap_ - total(); }

  private:
    std::atomic<std::int64_t> total_{0};
    std::atomic<std::int64_t> by_kind_[2] = {{0}, {0}};
    std::int64_t cap_ = -1;  // <0: uncapped
};

}  // namespace topoforge
