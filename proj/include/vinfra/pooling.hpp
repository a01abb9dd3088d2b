#pragma once

#include "vinfra/reliability.hpp"

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace vinfra {


// Probability that a total of y nodes (critical plus backup) fail in a VInf
// with n critical nodes, k backups and failure distribution f.
double z_vinf(std::size_t k, std::size_t y, std::size_t n, double p, const FailureDistribution& f);

struct PoolMember {
    std::string id;
    std::size_t n = 0; // critical count
    std::size_t k = 0; // backups, sized by min_backups for this member's own r
    double p = 0.0;    // physical failure probability
    double r = 0.0;    // the member's own guarantee
    FailureDistribution f;

    // throws std::invalid_argument unless k == min_backups(n, p, r, f)
    void validate() const;
};

// pmf over x in [0, k]: probability the member occupies or loses x of its
// lent backups; the top bin absorbs the tail.
std::vector<double> member_usage_pmf(const PoolMember& m);

// Spectral convolution of member usage pmfs, zero-padded to `length`
// (rounded up to a power of two internally). Throws LengthError when length
// cannot hold the full support sum(k_i) + 1.
std::vector<double> convolve_members(const std::vector<std::vector<double>>& members,
                                     std::size_t length);

struct AdmitDecision {
    bool admitted = false;
    std::string reason;             // "slots" or "reliability" when rejected
    double reliability_after = 0.0; // anchor reliability r0' after the decision
    std::vector<std::size_t> slots; // slots assigned to the candidate
};

// A pool anchored at one VInf whose k0 backups are lent to members; each slot
// serves the anchor plus at most one member, and every admission keeps the
// anchor reliability at or above its guarantee.
class BackupPool {
  public:
    explicit BackupPool(PoolMember anchor);

    const PoolMember& anchor() const { return anchor_; }
    const std::vector<PoolMember>& members() const { return members_; }
    std::size_t lent_slots() const;
    std::size_t free_slots() const { return anchor_.k - lent_slots(); }
    // slot index -> owning member id, empty when unlent
    const std::vector<std::string>& slot_owners() const { return slot_owner_; }
    std::vector<std::size_t> member_slots(const std::string& id) const;

    double reliability() const { return reliability_; }

    // Admission is a value decision, never an error: slots first, then the
    // anchor-guarantee criterion evaluated through the cached spectra.
    AdmitDecision admit(const PoolMember& candidate);
    void remove(const std::string& id); // NotFoundError when absent

    // Re-attach a member at explicit slots (state-file loading). Skips the
    // admission criterion; callers re-check invariants afterwards.
    void restore(const PoolMember& member, const std::vector<std::size_t>& slots);

    void check_invariants() const; // throws std::logic_error on violation

    std::size_t transform_length() const { return transform_length_; }

  private:
    double compute_reliability(const std::vector<std::complex<double>>* extra_spectrum,
                               std::size_t extra_k) const;

    PoolMember anchor_;
    std::vector<PoolMember> members_;
    std::vector<std::string> slot_owner_;
    std::vector<std::vector<std::complex<double>>> spectra_; // parallel to members_
    std::size_t transform_length_ = 1;
    double reliability_ = 1.0;
};

double pooled_reliability(const BackupPool& pool);

} // namespace vinfra
