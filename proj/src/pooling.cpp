#include "vinfra/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace vinfra {

namespace {

std::size_t next_pow2(std::size_t v) {
    std::size_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

// in-place iterative radix-2 transform; size must be a power of two
void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1 : -1);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

std::vector<std::complex<double>> forward_spectrum(const std::vector<double>& pmf,
                                                   std::size_t length) {
    std::vector<std::complex<double>> a(length, 0.0);
    for (std::size_t i = 0; i < pmf.size(); ++i) a[i] = pmf[i];
    fft(a, false);
    return a;
}

// inverse transform of a spectrum product back to a pmf, with the round-off
// guard from the transform: deviations beyond 1e-9 indicate a real bug
std::vector<double> spectrum_to_pmf(std::vector<std::complex<double>> spec, std::size_t length) {
    fft(spec, true);
    std::vector<double> out(length, 0.0);
    for (std::size_t i = 0; i < length; ++i) {
        const double re = spec[i].real();
        if (std::abs(spec[i].imag()) > 1e-9 || re < -1e-9 || re > 1.0 + 1e-9)
            throw std::logic_error("convolution round-off exceeded tolerance");
        out[i] = std::clamp(re, 0.0, 1.0);
    }
    return out;
}

} // namespace

double z_vinf(std::size_t k, std::size_t y, std::size_t n, double p,
              const FailureDistribution& f) {
    double s = 0.0;
    const std::size_t xmax = std::min(n, y);
    for (std::size_t x = 0; x <= xmax; ++x) {
        const std::size_t j = y - x;
        if (j > k) continue;
        s += binomial_pmf(k, static_cast<long long>(j), p) * f.probs[x];
    }
    return s;
}

void PoolMember::validate() const {
    ReliabilityQuery{n, p, r, f}.validate();
    if (k != min_backups(n, p, r, f))
        throw std::invalid_argument("PoolMember: k must equal the member's standalone minimum");
}

std::vector<double> member_usage_pmf(const PoolMember& m) {
    std::vector<double> q(m.k + 1, 0.0);
    double head = 0.0;
    for (std::size_t x = 0; x < m.k; ++x) {
        q[x] = z_vinf(m.k, x, m.n, m.p, m.f);
        head += q[x];
    }
    q[m.k] = std::max(0.0, 1.0 - head);
    return q;
}

std::vector<double> convolve_members(const std::vector<std::vector<double>>& members,
                                     std::size_t length) {
    std::size_t support = 1;
    for (const auto& q : members) support += q.size() - 1;
    if (length < support)
        throw LengthError("convolve_members: transform length cannot hold the support");
    const std::size_t n = next_pow2(length);
    std::vector<std::complex<double>> prod(n, 1.0);
    for (const auto& q : members) {
        auto spec = forward_spectrum(q, n);
        for (std::size_t i = 0; i < n; ++i) prod[i] *= spec[i];
    }
    return spectrum_to_pmf(std::move(prod), length);
}

BackupPool::BackupPool(PoolMember anchor) : anchor_(std::move(anchor)) {
    anchor_.validate();
    slot_owner_.assign(anchor_.k, std::string{});
    transform_length_ = next_pow2(anchor_.k + 1);
    reliability_ = compute_reliability(nullptr, 0);
}

std::size_t BackupPool::lent_slots() const {
    std::size_t total = 0;
    for (const auto& m : members_) total += m.k;
    return total;
}

std::vector<std::size_t> BackupPool::member_slots(const std::string& id) const {
    std::vector<std::size_t> slots;
    for (std::size_t s = 0; s < slot_owner_.size(); ++s)
        if (slot_owner_[s] == id) slots.push_back(s);
    return slots;
}

double BackupPool::compute_reliability(const std::vector<std::complex<double>>* extra_spectrum,
                                       std::size_t extra_k) const {
    const std::size_t k0 = anchor_.k;
    const std::size_t kp = lent_slots() + extra_k;
    std::vector<double> Q;
    if (members_.empty() && extra_spectrum == nullptr) {
        Q = {1.0};
    } else {
        std::vector<std::complex<double>> prod(transform_length_, 1.0);
        for (const auto& spec : spectra_)
            for (std::size_t i = 0; i < transform_length_; ++i) prod[i] *= spec[i];
        if (extra_spectrum)
            for (std::size_t i = 0; i < transform_length_; ++i) prod[i] *= (*extra_spectrum)[i];
        Q = spectrum_to_pmf(std::move(prod), kp + 1);
    }

    // total-failure pmf of the anchor's own system keeping k0 - k' backups
    const std::size_t retained = k0 - kp;
    const std::size_t zlen = anchor_.n + retained + 1;
    std::vector<double> z(zlen);
    for (std::size_t y = 0; y < zlen; ++y) z[y] = z_vinf(retained, y, anchor_.n, anchor_.p, anchor_.f);
    // tail(x) = P(more than k0 - x total failures), summed small-end first
    double r = 1.0;
    for (std::size_t x = 0; x <= kp; ++x) {
        double tail = 0.0;
        for (std::size_t y = zlen; y-- > 0;) {
            if (y <= k0 - x) break;
            tail += z[y];
        }
        r -= Q[x] * tail;
    }
    return std::clamp(r, 0.0, 1.0);
}

AdmitDecision BackupPool::admit(const PoolMember& candidate) {
    candidate.validate();
    if (candidate.p != anchor_.p)
        throw std::invalid_argument("BackupPool: members must share the anchor's failure rate");
    for (const auto& m : members_)
        if (m.id == candidate.id)
            throw std::invalid_argument("BackupPool: duplicate member id");
    AdmitDecision d;
    if (candidate.k > free_slots()) {
        d.reason = "slots";
        d.reliability_after = reliability_;
        return d;
    }
    auto spectrum = forward_spectrum(member_usage_pmf(candidate), transform_length_);
    const double r_after = compute_reliability(&spectrum, candidate.k);
    if (r_after < anchor_.r - 1e-12) {
        d.reason = "reliability";
        d.reliability_after = reliability_;
        return d;
    }
    // lowest-index free slots
    for (std::size_t s = 0; s < slot_owner_.size() && d.slots.size() < candidate.k; ++s) {
        if (slot_owner_[s].empty()) {
            slot_owner_[s] = candidate.id;
            d.slots.push_back(s);
        }
    }
    members_.push_back(candidate);
    spectra_.push_back(std::move(spectrum));
    reliability_ = r_after;
    d.admitted = true;
    d.reliability_after = r_after;
    return d;
}

void BackupPool::restore(const PoolMember& member, const std::vector<std::size_t>& slots) {
    member.validate();
    if (member.p != anchor_.p)
        throw std::invalid_argument("BackupPool: members must share the anchor's failure rate");
    if (slots.size() != member.k)
        throw std::invalid_argument("BackupPool: slot list does not match the member's k");
    for (const auto& m : members_)
        if (m.id == member.id) throw std::invalid_argument("BackupPool: duplicate member id");
    for (auto s : slots) {
        if (s >= slot_owner_.size() || !slot_owner_[s].empty())
            throw std::invalid_argument("BackupPool: slot unavailable");
    }
    for (auto s : slots) slot_owner_[s] = member.id;
    members_.push_back(member);
    spectra_.push_back(forward_spectrum(member_usage_pmf(member), transform_length_));
    reliability_ = compute_reliability(nullptr, 0);
}

void BackupPool::remove(const std::string& id) {
    const auto it = std::find_if(members_.begin(), members_.end(),
                                 [&](const PoolMember& m) { return m.id == id; });
    if (it == members_.end()) throw NotFoundError("BackupPool: member not found: " + id);
    spectra_.erase(spectra_.begin() + (it - members_.begin()));
    members_.erase(it);
    for (auto& owner : slot_owner_)
        if (owner == id) owner.clear();
    reliability_ = compute_reliability(nullptr, 0);
}

void BackupPool::check_invariants() const {
    if (lent_slots() > anchor_.k) throw std::logic_error("pool invariant: slots oversubscribed");
    for (const auto& m : members_) {
        const auto slots = member_slots(m.id);
        if (slots.size() != m.k)
            throw std::logic_error("pool invariant: member slot count mismatch");
    }
    std::size_t owned = 0;
    for (const auto& owner : slot_owner_) owned += !owner.empty();
    if (owned != lent_slots()) throw std::logic_error("pool invariant: stray slot assignment");
    if (reliability_ < anchor_.r - 1e-12)
        throw std::logic_error("pool invariant: anchor guarantee violated");
    const double recomputed = compute_reliability(nullptr, 0);
    if (std::abs(recomputed - reliability_) > 1e-9)
        throw std::logic_error("pool invariant: cached reliability stale");
}

double pooled_reliability(const BackupPool& pool) { return pool.reliability(); }

} // namespace vinfra
