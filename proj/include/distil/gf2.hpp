#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace distil {

/// Binary vector over GF(2), bit-packed into 64-bit words.
///
/// Bell labels, Pauli labels and parity-check vectors all use this type.
/// Bit 0 is the leftmost character of the string form ("10" has bit 0 set),
/// and within a qubit pair the phase bit precedes the amplitude bit.
class BitVec {
public:
    BitVec() = default;

    explicit BitVec(std::size_t len) : len_(len), words_(word_count(len), 0) {}

    static BitVec zeros(std::size_t len) { return BitVec(len); }

    static BitVec ones(std::size_t len) {
        BitVec v(len);
        for (auto& w : v.words_) w = ~std::uint64_t{0};
        v.mask_tail();
        return v;
    }

    static BitVec parse(std::string_view s) {
        BitVec v(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1') {
                v.set_bit(i, true);
            } else if (s[i] != '0') {
                throw std::invalid_argument("BitVec::parse: expected only '0' or '1'");
            }
        }
        return v;
    }

    /// Value with vector bit 0 as the most significant bit, so
    /// from_uint(0b0010, 4) == parse("0010").
    static BitVec from_uint(std::uint64_t value, std::size_t len) {
        if (len > 64) throw std::invalid_argument("BitVec::from_uint: len > 64");
        BitVec v(len);
        for (std::size_t i = 0; i < len; ++i) {
            v.set_bit(i, (value >> (len - 1 - i)) & 1u);
        }
        return v;
    }

    std::uint64_t to_uint() const {
        if (len_ > 64) throw std::invalid_argument("BitVec::to_uint: vector longer than 64 bits");
        std::uint64_t out = 0;
        for (std::size_t i = 0; i < len_; ++i) {
            out = (out << 1) | static_cast<std::uint64_t>(bit(i));
        }
        return out;
    }

    static BitVec concat(const BitVec& a, const BitVec& b) {
        BitVec v(a.len_ + b.len_);
        for (std::size_t i = 0; i < a.len_; ++i) v.set_bit(i, a.bit(i));
        for (std::size_t i = 0; i < b.len_; ++i) v.set_bit(a.len_ + i, b.bit(i));
        return v;
    }

    /// x with every element repeated as a two-bit unit, x "tensor" unit.
    /// tensor(parse("10"), parse("11")) == parse("1100").
    static BitVec tensor(const BitVec& x, const BitVec& unit) {
        BitVec v(x.size() * unit.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!x.bit(i)) continue;
            for (std::size_t j = 0; j < unit.size(); ++j) {
                v.set_bit(i * unit.size() + j, unit.bit(j));
            }
        }
        return v;
    }

    std::size_t size() const { return len_; }
    bool empty() const { return len_ == 0; }

    bool bit(std::size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set_bit(std::size_t i, bool value) {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (value) {
            words_[i >> 6] |= mask;
        } else {
            words_[i >> 6] &= ~mask;
        }
    }

    bool is_zero() const {
        for (auto w : words_) {
            if (w != 0) return false;
        }
        return true;
    }

    std::string str() const {
        std::string s(len_, '0');
        for (std::size_t i = 0; i < len_; ++i) {
            if (bit(i)) s[i] = '1';
        }
        return s;
    }

    BitVec& operator+=(const BitVec& other) {
        if (other.len_ != len_) throw std::invalid_argument("BitVec: length mismatch in addition");
        for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other.words_[k];
        return *this;
    }

    friend BitVec operator+(BitVec a, const BitVec& b) { return a += b; }

    bool operator==(const BitVec&) const = default;
    auto operator<=>(const BitVec&) const = default;

    /// a . b mod 2
    friend int dot(const BitVec& a, const BitVec& b) {
        if (a.len_ != b.len_) throw std::invalid_argument("BitVec: length mismatch in dot product");
        std::uint64_t acc = 0;
        for (std::size_t k = 0; k < a.words_.size(); ++k) {
            acc ^= a.words_[k] & b.words_[k];
        }
        return std::popcount(acc) & 1;
    }

    /// P v: swaps the two bits within each pair.
    BitVec pair_swapped() const {
        require_even("BitVec::pair_swapped");
        constexpr std::uint64_t kEven = 0x5555555555555555ull;
        BitVec v(len_);
        for (std::size_t k = 0; k < words_.size(); ++k) {
            const std::uint64_t w = words_[k];
            v.words_[k] = ((w & kEven) << 1) | ((w >> 1) & kEven);
        }
        return v;
    }

    /// v^T U v where U = I_n (x) [[0,1],[0,0]]: parity of pairs with both bits set.
    int u_quadratic() const {
        require_even("BitVec::u_quadratic");
        constexpr std::uint64_t kEven = 0x5555555555555555ull;
        std::uint64_t acc = 0;
        for (auto w : words_) {
            acc ^= w & (w >> 1) & kEven;
        }
        return std::popcount(acc) & 1;
    }

    void require_even(const char* who) const {
        if (len_ < 2 || (len_ & 1)) {
            throw std::invalid_argument(std::string(who) + ": length must be even and >= 2");
        }
    }

private:
    static std::size_t word_count(std::size_t len) { return (len + 63) / 64; }

    void mask_tail() {
        const std::size_t tail = len_ & 63;
        if (tail != 0 && !words_.empty()) {
            words_.back() &= (std::uint64_t{1} << tail) - 1;
        }
    }

    std::size_t len_ = 0;
    std::vector<std::uint64_t> words_;
};

/// a^T P b mod 2; zero exactly when the Pauli operators sigma_a, sigma_b commute.
inline int symplectic_product(const BitVec& a, const BitVec& b) {
    a.require_even("symplectic_product");
    if (a.size() != b.size()) throw std::invalid_argument("symplectic_product: length mismatch");
    return dot(a, b.pair_swapped());
}

/// Exponent alpha of the bilateral measurement sign: measuring sigma_{Pr} on
/// both halves of |B_s> multiplies the two outcomes to (-1)^alpha with
/// alpha = r^T s + r^T U r.
inline int bpm_outcome_sign(const BitVec& r, const BitVec& s) {
    r.require_even("bpm_outcome_sign");
    if (r.size() != s.size()) throw std::invalid_argument("bpm_outcome_sign: length mismatch");
    if (r.is_zero()) throw std::invalid_argument("bpm_outcome_sign: r must be nonzero");
    return dot(r, s) ^ r.u_quadratic();
}

/// After a bilateral measurement of r, the parity q^T s stays extractable
/// exactly when q^T P r = 0.
inline bool accessible_after_bpm(const BitVec& r, const BitVec& q) {
    if (r.is_zero()) throw std::invalid_argument("accessible_after_bpm: r must be nonzero");
    return symplectic_product(q, r) == 0;
}

/// Square binary matrix kept as rows; represents a Clifford action on Bell
/// labels when it satisfies C^T P C = P.
class SymplecticMatrix {
public:
    explicit SymplecticMatrix(std::vector<BitVec> rows) : rows_(std::move(rows)) {
        const std::size_t n = rows_.size();
        if (n < 2 || (n & 1)) throw std::invalid_argument("SymplecticMatrix: dimension must be even and >= 2");
        for (const auto& r : rows_) {
            if (r.size() != n) throw std::invalid_argument("SymplecticMatrix: rows must be square");
        }
    }

    static SymplecticMatrix identity(std::size_t dim) {
        std::vector<BitVec> rows;
        rows.reserve(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            BitVec r(dim);
            r.set_bit(i, true);
            rows.push_back(std::move(r));
        }
        return SymplecticMatrix(std::move(rows));
    }

    std::size_t dim() const { return rows_.size(); }
    const BitVec& row(std::size_t i) const { return rows_[i]; }

    /// C v over GF(2).
    BitVec apply(const BitVec& v) const {
        if (v.size() != dim()) throw std::invalid_argument("SymplecticMatrix::apply: length mismatch");
        BitVec out(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            out.set_bit(i, dot(rows_[i], v));
        }
        return out;
    }

    BitVec column(std::size_t j) const {
        BitVec c(dim());
        for (std::size_t i = 0; i < dim(); ++i) c.set_bit(i, rows_[i].bit(j));
        return c;
    }

    /// Checks C^T P C = P entrywise via columns.
    bool is_symplectic() const {
        const std::size_t n = dim();
        std::vector<BitVec> cols;
        cols.reserve(n);
        for (std::size_t j = 0; j < n; ++j) cols.push_back(column(j));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                const int want = (j == i + 1 && (i & 1) == 0) ? 1 : 0;
                if (symplectic_product(cols[i], cols[j]) != want) return false;
            }
        }
        return true;
    }

private:
    std::vector<BitVec> rows_;
};

namespace detail {

// v projected into the symplectic complement of the hyperbolic pair (u, w),
// where u^T P w = 1.
inline BitVec project_off_pair(BitVec v, const BitVec& u, const BitVec& w) {
    const int cu = symplectic_product(v, w);
    const int cw = symplectic_product(v, u);
    if (cu) v += u;
    if (cw) v += w;
    return v;
}

// Reduce a spanning set to an independent basis, scanning pivots lowest
// index first so the result is reproducible.
inline std::vector<BitVec> independent_subset(const std::vector<BitVec>& vectors) {
    std::vector<BitVec> basis;
    std::vector<std::size_t> pivots;
    for (const auto& v0 : vectors) {
        BitVec v = v0;
        for (std::size_t k = 0; k < basis.size(); ++k) {
            if (v.bit(pivots[k])) v += basis[k];
        }
        if (v.is_zero()) continue;
        std::size_t p = 0;
        while (!v.bit(p)) ++p;
        basis.push_back(v);
        pivots.push_back(p);
    }
    return basis;
}

}  // namespace detail

/// Deterministic symplectic completion: a matrix C with C^T P C = P whose
/// last row is r. The second-last row b satisfies b^T P r = 1 and is the
/// lowest-index standard basis vector that does; the remaining rows come
/// from greedy hyperbolic-pair extraction over the projected standard basis.
inline SymplecticMatrix complete_symplectic(const BitVec& r) {
    r.require_even("complete_symplectic");
    if (r.is_zero()) throw std::invalid_argument("complete_symplectic: r must be nonzero");
    const std::size_t dim = r.size();

    // partner of r: e_j with e_j^T P r = 1, i.e. the first set bit of P r.
    const BitVec pr = r.pair_swapped();
    std::size_t j = 0;
    while (!pr.bit(j)) ++j;
    BitVec b(dim);
    b.set_bit(j, true);

    std::vector<BitVec> work;
    work.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        BitVec e(dim);
        e.set_bit(i, true);
        BitVec v = detail::project_off_pair(std::move(e), b, r);
        if (!v.is_zero()) work.push_back(std::move(v));
    }
    work = detail::independent_subset(work);

    std::vector<std::pair<BitVec, BitVec>> pairs;
    while (!work.empty()) {
        BitVec u = work.front();
        std::size_t partner = work.size();
        for (std::size_t k = 1; k < work.size(); ++k) {
            if (symplectic_product(u, work[k]) == 1) {
                partner = k;
                break;
            }
        }
        if (partner == work.size()) {
            throw std::logic_error("complete_symplectic: degenerate complement");
        }
        BitVec w = work[partner];
        std::vector<BitVec> next;
        next.reserve(work.size());
        for (std::size_t k = 1; k < work.size(); ++k) {
            if (k == partner) continue;
            BitVec v = detail::project_off_pair(work[k], u, w);
            if (!v.is_zero()) next.push_back(std::move(v));
        }
        pairs.emplace_back(std::move(u), std::move(w));
        work = detail::independent_subset(next);
    }

    std::vector<BitVec> rows;
    rows.reserve(dim);
    for (auto& [u, w] : pairs) {
        rows.push_back(std::move(u));
        rows.push_back(std::move(w));
    }
    rows.push_back(std::move(b));
    rows.push_back(r);
    return SymplecticMatrix(std::move(rows));
}

/// The (2n+2)-dimensional Clifford used to copy the parity r^T s onto an
/// appended ebit: block identity over the first 2n labels with column Pr,
/// and last rows [0..0 1 0], [r 0 1]. Maps s appended with 00 to s appended
/// with (0, r^T s).
inline SymplecticMatrix aem_embedding(const BitVec& r) {
    r.require_even("aem_embedding");
    if (r.is_zero()) throw std::invalid_argument("aem_embedding: r must be nonzero");
    const std::size_t n2 = r.size();
    const BitVec pr = r.pair_swapped();

    std::vector<BitVec> rows;
    rows.reserve(n2 + 2);
    for (std::size_t i = 0; i < n2; ++i) {
        BitVec row(n2 + 2);
        row.set_bit(i, true);
        row.set_bit(n2, pr.bit(i));
        rows.push_back(std::move(row));
    }
    BitVec ebit_phase(n2 + 2);
    ebit_phase.set_bit(n2, true);
    rows.push_back(std::move(ebit_phase));

    BitVec ebit_amp(n2 + 2);
    for (std::size_t i = 0; i < n2; ++i) ebit_amp.set_bit(i, r.bit(i));
    ebit_amp.set_bit(n2 + 1, true);
    rows.push_back(std::move(ebit_amp));

    return SymplecticMatrix(std::move(rows));
}

}  // namespace distil
